import { writeFileSync } from 'node:fs'

/** Small deterministic PRNG (mulberry32) so pair sampling is reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0
  return () => {
    a = (a + 0x6d2b79f5) >>> 0
    let t = a
    t = Math.imul(t ^ (t >>> 15), t | 1)
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61)
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296
  }
}

export interface TextPair {
  text1: string
  text2: string
}

/**
 * Sample ordered text pairs uniformly from the pool, never pairing a text
 * with itself (by index). Seeded-deterministic.
 */
export function makePairCorpus(pool: string[], nPairs: number, seed: number): TextPair[] {
  if (pool.length < 2) {
    throw new Error(`pool of ${pool.length} texts is too small, need >= 2`)
  }
  if (nPairs < 0) throw new Error('nPairs must be >= 0')
  const rand = mulberry32(seed)
  const pairs: TextPair[] = []
  for (let k = 0; k < nPairs; k++) {
    const i = Math.floor(rand() * pool.length)
    // draw the second index from the pool minus slot i
    let j = Math.floor(rand() * (pool.length - 1))
    if (j >= i) j += 1
    pairs.push({ text1: pool[i], text2: pool[j] })
  }
  return pairs
}

export function writePairs(path: string, pairs: TextPair[]): void {
  const body = pairs.map(p => JSON.stringify(p)).join('\n')
  writeFileSync(path, pairs.length > 0 ? body + '\n' : '')
}
