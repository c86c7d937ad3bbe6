import { plotScaling } from "./scaling";
import { plotTelemetry } from "./telemetry";

const USAGE = `usage:
  telemetry <telemetry.csv> <outdir>   four PNG figures from a walk telemetry file
  scaling   <results.csv>   <outdir>   discrepancy-vs-k figure from a results file`;

export function run(argv: string[]): number {
  const [command, csvPath, outDir, ...extra] = argv;
  if (!command || !csvPath || !outDir || extra.length > 0) {
    process.stderr.write(USAGE + "\n");
    return 2;
  }
  let handler: (csv: string, out: string) => string[];
  if (command === "telemetry") {
    handler = plotTelemetry;
  } else if (command === "scaling") {
    handler = plotScaling;
  } else {
    process.stderr.write(`unknown command: ${command}\n${USAGE}\n`);
    return 2;
  }
  try {
    for (const file of handler(csvPath, outDir)) {
      process.stdout.write(file + "\n");
    }
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
