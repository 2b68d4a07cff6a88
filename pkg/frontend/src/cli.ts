#!/usr/bin/env node
/**
 * plots <kind> --in <csv> --out <svg>
 *
 * Exit codes: 0 written, 2 usage/input problems (missing column, empty
 * or unreadable CSV, unknown kind), 1 anything unexpected.
 */

import { readFile, writeFile } from "fs/promises";
import yargs from "yargs";

import { CsvError } from "./csv.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

class UsageError extends Error {}

interface Args {
  kind: FigureKind;
  in: string;
  out: string;
}

async function parseArgs(argv: string[]): Promise<Args> {
  const parsed = await yargs(argv)
    .scriptName("plots")
    .command("$0 <kind>", "render one figure from a CSV artifact", (y) =>
      y
        .positional("kind", {
          describe: "figure to render",
          choices: FIGURE_KINDS,
          demandOption: true,
        })
        .option("in", { type: "string", demandOption: true, describe: "input CSV path" })
        .option("out", { type: "string", demandOption: true, describe: "output SVG path" }),
    )
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new UsageError(msg ?? "bad usage");
    })
    .parse();
  return parsed as unknown as Args;
}

export async function run(argv: string[]): Promise<number> {
  try {
    const args = await parseArgs(argv);
    const text = await readFile(args.in, "utf-8");
    await writeFile(args.out, renderFigure(args.kind, text));
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof CsvError || err instanceof UsageError) {
      console.error(`plots: ${err.message}`);
      return 2;
    }
    if (err instanceof Error && "code" in err && err.code === "ENOENT") {
      console.error(`plots: ${err.message}`);
      return 2;
    }
    console.error(`plots: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
