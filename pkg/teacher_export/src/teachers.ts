import { loadOracle } from './oracle.js'
import { Teacher } from './types.js'

/** Emits the same distribution for every input; handy for tests and dry runs. */
export class ConstantTeacher implements Teacher {
  readonly nClasses: number

  constructor(private readonly probs: number[]) {
    if (probs.length < 2) throw new Error('need at least 2 class probabilities')
    if (probs.some(p => p < 0)) throw new Error('negative probability')
    const sum = probs.reduce((a, b) => a + b, 0)
    if (Math.abs(sum - 1) > 1e-6) {
      throw new Error(`probabilities sum to ${sum}, expected 1`)
    }
    this.nClasses = probs.length
  }

  predict(texts: string[]): number[][] {
    return texts.map(() => [...this.probs])
  }
}

/**
 * Resolve a --teacher spec string:
 *   oracle:rule.json     rule-based closed-form teacher
 *   constant:[0.3,0.7]   fixed distribution
 * Anything else (a fine-tuned transformer checkpoint path, say) is not
 * loadable here and fails with a clear message.
 */
export function loadTeacher(spec: string): Teacher {
  if (spec.startsWith('oracle:')) {
    return loadOracle(spec.slice('oracle:'.length))
  }
  if (spec.startsWith('constant:')) {
    const probs = JSON.parse(spec.slice('constant:'.length))
    if (!Array.isArray(probs)) throw new Error('constant teacher needs a JSON array')
    return new ConstantTeacher(probs as number[])
  }
  throw new Error(
    `cannot load teacher ${JSON.stringify(spec)}: supported specs are ` +
    `"oracle:<rule.json>" and "constant:<json array>"`,
  )
}
