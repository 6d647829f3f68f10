#!/usr/bin/env node
/** harness crawl: produce the three snapshot files for one page. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { runTriple } from "./crawler.js";
import {
  DEFAULT_INTER_VISIT_DELAY_S,
  DEFAULT_SESSION_BUFFER_S,
  DEFAULT_TIMEOUT_S,
} from "./types.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command("crawl", "run the three-visit protocol against a site definition")
    .demandCommand(1)
    .option("url", { type: "string", demandOption: true })
    .option("site", {
      type: "string",
      demandOption: true,
      describe: "site definition file the embedded engine renders",
    })
    .option("fixed-list", { type: "string", demandOption: true })
    .option("breaking-list", { type: "string", demandOption: true })
    .option("plan", { type: "string", describe: "interaction plan JSON (optional)" })
    .option("out", { type: "string", demandOption: true })
    .option("timeout", { type: "number", default: DEFAULT_TIMEOUT_S })
    .option("inter-visit-delay", {
      type: "number",
      default: DEFAULT_INTER_VISIT_DELAY_S,
      describe: "minimum seconds between visits to the same page",
    })
    .strict()
    .parse();

  const result = await runTriple({
    url: argv.url,
    siteFile: argv.site,
    fixedListFile: argv["fixed-list"],
    breakingListFile: argv["breaking-list"],
    planFile: argv.plan,
    outDir: argv.out,
    timeoutS: argv.timeout,
    interVisitDelayS: argv["inter-visit-delay"],
    sessionBufferS: DEFAULT_SESSION_BUFFER_S,
  });

  let failed = false;
  for (const visit of result.visits) {
    const where = visit.snapshotPath ?? "-";
    console.log(`${visit.condition}\t${visit.status}\t${where}`);
    if (visit.status !== "OK") {
      failed = true;
      if (visit.error) console.error(`  ${visit.error}`);
    }
  }
  return failed ? 1 : 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(String(err));
    process.exit(1);
  },
);
