import { parseArgs } from "node:util";

import { ExportMode, trainAndExport } from "./export.js";

const { values } = parseArgs({
    options: {
        mode: { type: "string", default: "infogan" },
        out: { type: "string", default: "bundle" },
        seed: { type: "string", default: "7" },
        epochs: { type: "string", default: "40" },
        samples: { type: "string", default: "600" },
    },
});

const mode = values.mode as ExportMode;
if (!["identity", "dcgan", "infogan"].includes(mode)) {
    console.error(`unknown mode ${mode}; use identity, dcgan or infogan`);
    process.exit(1);
}

try {
    const summary = trainAndExport({
        mode,
        outDir: values.out as string,
        seed: Number(values.seed),
        epochs: Number(values.epochs),
        samples: Number(values.samples),
    });
    console.log(`wrote ${summary.files.length} files to ${summary.dir}`);
    if (mode === "infogan") {
        console.log(`code prediction accuracy: ${summary.codePredictionAccuracy.toFixed(3)}`);
    }
} catch (err) {
    console.error(`export failed: ${(err as Error).message}`);
    process.exit(2);
}
