import { readFileSync, writeFileSync } from 'node:fs'
import { SoftLabelRecord, Teacher } from './types.js'

interface InputLine {
  text?: string
  text1?: string
  text2?: string
}

/** Read a corpus: JSONL ({"text"} or {"text1","text2"}) or one doc per line. */
export function readInputLines(path: string): InputLine[] {
  const raw = readFileSync(path, 'utf-8')
  const lines = raw.split('\n').filter(l => l.trim().length > 0)
  if (path.endsWith('.jsonl') || path.endsWith('.json')) {
    return lines.map((line, i) => {
      let obj: InputLine
      try {
        obj = JSON.parse(line)
      } catch (err) {
        throw new Error(`line ${i + 1}: invalid JSON (${err})`)
      }
      const pair = typeof obj.text1 === 'string' && typeof obj.text2 === 'string'
      if (!pair && typeof obj.text !== 'string') {
        throw new Error(`line ${i + 1}: need "text" or "text1"/"text2"`)
      }
      return obj
    })
  }
  return lines.map(text => ({ text }))
}

function teacherInput(line: InputLine): string {
  return line.text !== undefined ? line.text : `${line.text1} ${line.text2}`
}

/**
 * Run the teacher over the inputs in batches and write one soft-label record
 * per input line, in input order. Returns the number of lines written.
 */
export function exportSoftLabels(
  teacher: Teacher,
  inputPath: string,
  outPath: string,
  batchSize = 64,
): number {
  if (batchSize < 1) throw new Error('batch size must be >= 1')
  const inputs = readInputLines(inputPath)
  const records: SoftLabelRecord[] = []
  for (let start = 0; start < inputs.length; start += batchSize) {
    const batch = inputs.slice(start, start + batchSize)
    const probs = teacher.predict(batch.map(teacherInput))
    if (probs.length !== batch.length) {
      throw new Error(
        `teacher returned ${probs.length} predictions for a batch of ${batch.length}`,
      )
    }
    batch.forEach((line, i) => {
      const p = probs[i]
      if (p.length !== teacher.nClasses) {
        throw new Error(
          `line ${start + i + 1}: expected ${teacher.nClasses} classes, got ${p.length}`,
        )
      }
      records.push(line.text !== undefined
        ? { text: line.text, probs: p }
        : { text1: line.text1, text2: line.text2, probs: p })
    })
  }
  const body = records.map(r => JSON.stringify(r)).join('\n')
  writeFileSync(outPath, records.length > 0 ? body + '\n' : '')
  return records.length
}
