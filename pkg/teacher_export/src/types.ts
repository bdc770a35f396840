/** A teacher maps a batch of texts to per-class probability vectors. */
export interface Teacher {
  readonly nClasses: number
  predict(texts: string[]): number[][]
}

export interface SoftLabelRecord {
  text?: string
  text1?: string
  text2?: string
  probs: number[]
}
