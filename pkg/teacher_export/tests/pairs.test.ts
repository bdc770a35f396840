import { mkdtempSync, readFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { describe, expect, it } from 'vitest'
import { makePairCorpus, writePairs } from '../src/pairs.js'

const pool = Array.from({ length: 10 }, (_, i) => `q${i}`)

describe('makePairCorpus', () => {
  it('n=0 gives an empty file', () => {
    const dir = mkdtempSync(join(tmpdir(), 'pairs-'))
    const out = join(dir, 'pairs.jsonl')
    writePairs(out, makePairCorpus(pool, 0, 0))
    expect(readFileSync(out, 'utf-8')).toBe('')
  })

  it('is deterministic for a fixed seed', () => {
    const a = makePairCorpus(pool, 500, 42)
    const b = makePairCorpus(pool, 500, 42)
    expect(a).toEqual(b)
    const c = makePairCorpus(pool, 500, 43)
    expect(a).not.toEqual(c)
  })

  it('never pairs a text with itself', () => {
    for (const p of makePairCorpus(pool, 5000, 1)) {
      expect(p.text1).not.toBe(p.text2)
    }
  })

  it('rejects pools smaller than 2', () => {
    expect(() => makePairCorpus([], 1, 0)).toThrow(/too small/)
    expect(() => makePairCorpus(['only'], 1, 0)).toThrow(/too small/)
  })

  it('samples ordered pairs uniformly (chi-squared over 10k draws)', () => {
    const draws = 10_000
    const pairs = makePairCorpus(pool, draws, 7)
    const counts = new Map<string, number>()
    for (const p of pairs) {
      const key = `${p.text1}|${p.text2}`
      counts.set(key, (counts.get(key) ?? 0) + 1)
    }
    const cells = pool.length * (pool.length - 1) // 90 ordered pairs
    expect(counts.size).toBe(cells)
    const expected = draws / cells
    let chi2 = 0
    for (const c of counts.values()) {
      chi2 += (c - expected) ** 2 / expected
    }
    // df = 89; the alpha = 0.001 critical value is about 136
    expect(chi2).toBeLessThan(140)
  })
})
