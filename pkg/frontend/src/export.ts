/** Bundle assembly: weight file, test-image archive, parity fixtures and a
 *  digest manifest, all in the consuming toolkit's binary formats. */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { IMAGE_DIM, makeDigitDataset } from "./digits.js";
import { encodeImageArchive, encodeWeights, writeManifest } from "./format.js";
import { defaultGanConfig, sampleLatent, trainGenerator } from "./gan.js";
import { Act, LatentLayout, Mlp } from "./mlp.js";
import { Matrix, Rng } from "./tensor.js";

export type ExportMode = "identity" | "dcgan" | "infogan";

export interface ExportOptions {
    mode: ExportMode;
    outDir: string;
    seed: number;
    epochs: number;
    samples: number;
}

function fround(values: Float64Array): Float64Array {
    return Float64Array.from(values, (v) => Math.fround(v));
}

function identityGenerator(): { net: Mlp; layout: LatentLayout } {
    const n = 16;
    const net = new Mlp(
        [{ weights: Matrix.identity(n), bias: new Float64Array(n), act: Act.Identity }],
        [{ offset: 0, length: n, act: Act.Identity }],
    );
    return { net, layout: { groups: [], continuous: 0, vDim: n, rC: 1, rV: 3 * Math.sqrt(n) } };
}

export interface BundleSummary {
    dir: string;
    files: string[];
    kind: ExportMode;
    codePredictionAccuracy: number;
}

export function trainAndExport(opts: ExportOptions): BundleSummary {
    mkdirSync(opts.outDir, { recursive: true });
    let net: Mlp;
    let layout: LatentLayout;
    let accuracy = 1;
    let testImages: Float64Array[];
    const meta: Record<string, string | number> = {
        bundle: "fcsrg-export",
        version: 1,
        kind: opts.mode,
        seed: opts.seed,
    };

    if (opts.mode === "identity") {
        ({ net, layout } = identityGenerator());
        const rng = new Rng(opts.seed);
        testImages = Array.from({ length: 8 }, (_, i) => {
            const v = new Float64Array(16);
            const sub = rng.substream(200 + i);
            for (let j = 0; j < 16; j++) v[j] = sub.normal();
            return v;
        });
        meta.epochs = 0;
    } else {
        const dataset = makeDigitDataset(opts.samples, opts.seed);
        layout = opts.mode === "infogan"
            ? { groups: [10], continuous: 0, vDim: 16, rC: 1, rV: 12 }
            : { groups: [], continuous: 0, vDim: 26, rC: 1, rV: 3 * Math.sqrt(26) };
        const cfg = { ...defaultGanConfig, epochs: opts.epochs, seed: opts.seed };
        const trained = trainGenerator(dataset.images, layout, cfg);
        net = trained.generator;
        accuracy = trained.codePredictionAccuracy;
        testImages = dataset.images.slice(0, 32);
        meta.epochs = opts.epochs;
        meta.train_samples = opts.samples;
        meta.code_prediction_accuracy = accuracy.toFixed(3);
        meta.image_width = 8;
        meta.image_height = 8;
    }
    const latentDim = layout.groups.reduce((a, b) => a + b, 0)
        + layout.continuous + layout.vDim;
    meta.n = net.outDim;
    meta.latent = latentDim;
    meta.groups = layout.groups.join(" ");
    meta.continuous = layout.continuous;
    meta.v_dim = layout.vDim;

    // parity fixture: 10 fixed latents (pre-rounded to f32 so both sides
    // evaluate the identical inputs) and their generator outputs
    const fixtureRng = new Rng(opts.seed).substream(500);
    const inputs: Float64Array[] = [];
    const outputs: Float64Array[] = [];
    for (let i = 0; i < 10; i++) {
        const z = fround(sampleLatent(layout, fixtureRng.substream(i)));
        inputs.push(z);
        outputs.push(net.forward(z));
    }

    const files: Record<string, Buffer> = {
        "generator.fcw": encodeWeights(net, layout),
        "test_images.fim": encodeImageArchive(testImages, net.outDim === 16 ? 16 : IMAGE_DIM),
        "fixture_inputs.fim": encodeImageArchive(inputs, latentDim),
        "fixture_outputs.fim": encodeImageArchive(outputs, net.outDim),
    };
    for (const [name, data] of Object.entries(files)) {
        writeFileSync(join(opts.outDir, name), data);
    }
    writeManifest(join(opts.outDir, "manifest.txt"), meta, files);
    return {
        dir: opts.outDir,
        files: [...Object.keys(files), "manifest.txt"],
        kind: opts.mode,
        codePredictionAccuracy: accuracy,
    };
}
