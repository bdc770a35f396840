#!/usr/bin/env node
import { readFileSync } from 'node:fs'
import yargs from 'yargs'
import { hideBin } from 'yargs/helpers'
import { exportSoftLabels } from './export.js'
import { makePairCorpus, writePairs } from './pairs.js'
import { loadTeacher } from './teachers.js'

yargs(hideBin(process.argv))
  .command(
    ['export', '$0'],
    'Run a teacher over a corpus and write soft labels as JSONL',
    y => y
      .option('teacher', {
        type: 'string',
        demandOption: true,
        describe: 'oracle:<rule.json> or constant:<json array>',
      })
      .option('input', { type: 'string', demandOption: true })
      .option('out', { type: 'string', demandOption: true })
      .option('batch', { type: 'number', default: 64 }),
    argv => {
      const teacher = loadTeacher(argv.teacher)
      const n = exportSoftLabels(teacher, argv.input, argv.out, argv.batch)
      console.log(`wrote ${n} soft-label lines to ${argv.out}`)
    },
  )
  .command(
    'make-pairs',
    'Sample random ordered text pairs from a pool',
    y => y
      .option('pool', { type: 'string', demandOption: true,
                        describe: 'text file, one doc per line' })
      .option('n', { type: 'number', demandOption: true })
      .option('seed', { type: 'number', default: 0 })
      .option('out', { type: 'string', demandOption: true }),
    argv => {
      const pool = readFileSync(argv.pool, 'utf-8')
        .split('\n')
        .filter(l => l.trim().length > 0)
      const pairs = makePairCorpus(pool, argv.n, argv.seed)
      writePairs(argv.out, pairs)
      console.log(`wrote ${pairs.length} pairs to ${argv.out}`)
    },
  )
  .strict()
  .demandCommand()
  .fail((msg, err) => {
    console.error(`error: ${err ? err.message : msg}`)
    process.exit(2)
  })
  .parse()
