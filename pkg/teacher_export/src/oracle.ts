import { readFileSync } from 'node:fs'
import { Teacher } from './types.js'

/**
 * Rule file for the closed-form oracle teacher.
 *
 * Binary form: {"sharpness": 1.5, "weights": {"token": 1.0, ...}}
 *   score = sum of weights over tokens, p(class 1) = sigmoid(sharpness * score).
 *
 * Multi-class form: {"sharpness": 1.0, "classWeights": [{...}, {...}, ...]}
 *   per-class scores go through a softmax.
 */
export interface OracleRule {
  sharpness?: number
  weights?: Record<string, number>
  classWeights?: Record<string, number>[]
}

function tokenize(text: string): string[] {
  return text.toLowerCase().split(/\s+/).filter(t => t.length > 0)
}

function score(tokens: string[], weights: Record<string, number>): number {
  let total = 0
  for (const tok of tokens) {
    const w = weights[tok]
    if (w !== undefined) total += w
  }
  return total
}

function softmax(logits: number[]): number[] {
  const m = Math.max(...logits)
  const exps = logits.map(v => Math.exp(v - m))
  const sum = exps.reduce((a, b) => a + b, 0)
  return exps.map(v => v / sum)
}

export class OracleTeacher implements Teacher {
  readonly nClasses: number
  private readonly rule: OracleRule
  private readonly sharpness: number

  constructor(rule: OracleRule) {
    if (!rule.weights && !rule.classWeights) {
      throw new Error('oracle rule needs "weights" or "classWeights"')
    }
    this.rule = rule
    this.sharpness = rule.sharpness ?? 1.0
    this.nClasses = rule.classWeights ? rule.classWeights.length : 2
    if (this.nClasses < 2) {
      throw new Error('oracle rule needs at least 2 classes')
    }
  }

  predictOne(text: string): number[] {
    const tokens = tokenize(text)
    if (this.rule.classWeights) {
      const logits = this.rule.classWeights.map(
        w => this.sharpness * score(tokens, w),
      )
      return softmax(logits)
    }
    const p1 = 1 / (1 + Math.exp(-this.sharpness * score(tokens, this.rule.weights!)))
    return [1 - p1, p1]
  }

  predict(texts: string[]): number[][] {
    return texts.map(t => this.predictOne(t))
  }
}

export function loadOracle(path: string): OracleTeacher {
  let raw: string
  try {
    raw = readFileSync(path, 'utf-8')
  } catch (err) {
    throw new Error(`cannot read oracle rule file ${path}: ${err}`)
  }
  return new OracleTeacher(JSON.parse(raw) as OracleRule)
}
