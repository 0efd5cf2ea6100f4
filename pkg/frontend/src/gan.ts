/** Toy adversarial trainers, dense-only so the result is exportable.
 *
 *  The plain variant draws its latent from a single Gaussian ball; the
 *  code-structured variant splits the latent into a one-hot codeword plus
 *  noise and adds an auxiliary head that predicts the codeword back from the
 *  generated image, pushing the generator to keep codes recognizable. The
 *  auxiliary head and the discriminator are training-time only.
 */

import { Act, Adam, LatentLayout, Mlp, OutputBlock, initMlp, mlpParams } from "./mlp.js";
import { Rng, norm } from "./tensor.js";

export interface GanConfig {
    hiddenG: number;
    hiddenD: number;
    epochs: number;
    batchSize: number;
    lr: number;
    infoWeight: number;
    seed: number;
}

export const defaultGanConfig: GanConfig = {
    hiddenG: 48,
    hiddenD: 48,
    epochs: 40,
    batchSize: 32,
    lr: 2e-3,
    infoWeight: 2.0,
    seed: 7,
};

export interface TrainedGenerator {
    generator: Mlp;
    layout: LatentLayout;
    lossTrace: { d: number; g: number; info: number }[];
    codePredictionAccuracy: number;
}

export function sampleLatent(layout: LatentLayout, rng: Rng): Float64Array {
    const d = layout.groups.reduce((a, b) => a + b, 0) + layout.continuous;
    const z = new Float64Array(d + layout.vDim);
    let off = 0;
    for (const g of layout.groups) {
        z[off + rng.int(g)] = 1;
        off += g;
    }
    for (let i = 0; i < layout.continuous; i++) z[off + i] = rng.uniform(-1, 1);
    off += layout.continuous;
    const v = new Float64Array(layout.vDim);
    for (let i = 0; i < layout.vDim; i++) v[i] = rng.normal();
    const nv = norm(v);
    const scale = nv > layout.rV ? layout.rV / nv : 1;
    for (let i = 0; i < layout.vDim; i++) z[off + i] = scale * v[i];
    return z;
}

function clamp01(v: number): number {
    return Math.min(1 - 1e-12, Math.max(1e-12, v));
}

function zeroLike(params: Float64Array[]): Float64Array[] {
    return params.map((p) => new Float64Array(p.length));
}

function accumulate(into: Float64Array[], grads: { dW: Float64Array; db: Float64Array }[],
                    scale: number): void {
    let k = 0;
    for (const g of grads) {
        const w = into[k++];
        for (let i = 0; i < g.dW.length; i++) w[i] += scale * g.dW[i];
        const b = into[k++];
        for (let i = 0; i < g.db.length; i++) b[i] += scale * g.db[i];
    }
}

/** Adversarial training on an image list; codeStructured adds the auxiliary
 *  code-prediction objective. */
export function trainGenerator(images: Float64Array[], layout: LatentLayout,
                               cfg: GanConfig): TrainedGenerator {
    const n = images[0].length;
    const latentDim = layout.groups.reduce((a, b) => a + b, 0)
        + layout.continuous + layout.vDim;
    const codeDim = layout.groups.reduce((a, b) => a + b, 0);
    const codeStructured = codeDim > 0;
    const rng = new Rng(cfg.seed);

    const gen = initMlp([latentDim, cfg.hiddenG, n],
                        [Act.Relu, Act.Sigmoid], null, rng.substream(1));
    const disc = initMlp([n, cfg.hiddenD, 1],
                         [Act.Relu, Act.Sigmoid], null, rng.substream(2));
    const softBlocks: OutputBlock[] = [{ offset: 0, length: codeDim, act: Act.Softmax }];
    const aux = codeStructured
        ? initMlp([n, cfg.hiddenD, codeDim], [Act.Relu, Act.Identity],
                  softBlocks, rng.substream(3))
        : null;

    const genOpt = new Adam(mlpParams(gen), cfg.lr);
    const discOpt = new Adam(mlpParams(disc), cfg.lr);
    const auxOpt = aux ? new Adam(mlpParams(aux), cfg.lr) : null;

    const lossTrace: { d: number; g: number; info: number }[] = [];
    const order = images.map((_, i) => i);
    for (let epoch = 0; epoch < cfg.epochs; epoch++) {
        // seeded shuffle
        const shuffleRng = rng.substream(10, epoch);
        for (let i = order.length - 1; i > 0; i--) {
            const j = shuffleRng.int(i + 1);
            [order[i], order[j]] = [order[j], order[i]];
        }
        let dLoss = 0;
        let gLoss = 0;
        let infoLoss = 0;
        let steps = 0;
        for (let start = 0; start < order.length; start += cfg.batchSize) {
            const batch = order.slice(start, start + cfg.batchSize);
            const inv = 1 / batch.length;
            const stepRng = rng.substream(11, epoch, start);

            // discriminator step: real up, generated down
            const dGrads = zeroLike(mlpParams(disc));
            for (const [bi, idx] of batch.entries()) {
                const real = images[idx];
                const tReal = disc.forwardTrace(real);
                const dReal = clamp01(tReal.output[0]);
                dLoss += -Math.log(dReal) * inv;
                accumulate(dGrads, disc.backward(tReal, Float64Array.of(-1 / dReal)).grads, inv);

                const z = sampleLatent(layout, stepRng.substream(2 * bi));
                const fake = gen.forward(z);
                const tFake = disc.forwardTrace(fake);
                const dFake = clamp01(tFake.output[0]);
                dLoss += -Math.log(1 - dFake) * inv;
                accumulate(dGrads, disc.backward(tFake, Float64Array.of(1 / (1 - dFake))).grads, inv);
            }
            discOpt.step(dGrads);

            // generator (and auxiliary head) step
            const gGrads = zeroLike(mlpParams(gen));
            const aGrads = aux ? zeroLike(mlpParams(aux)) : [];
            for (const [bi, _] of batch.entries()) {
                const z = sampleLatent(layout, stepRng.substream(2 * bi + 1));
                const tGen = gen.forwardTrace(z);
                const fake = tGen.output;
                const tDisc = disc.forwardTrace(fake);
                const dFake = clamp01(tDisc.output[0]);
                gLoss += -Math.log(dFake) * inv;
                let gImage = disc.backward(tDisc, Float64Array.of(-1 / dFake)).gIn;

                if (aux) {
                    const tAux = aux.forwardTrace(fake);
                    const probs = tAux.output;
                    let ce = 0;
                    const gAuxOut = new Float64Array(codeDim);
                    for (let c = 0; c < codeDim; c++) {
                        if (z[c] === 1) ce -= Math.log(clamp01(probs[c]));
                        // softmax cross-entropy cotangent on the block output
                        gAuxOut[c] = -z[c] / clamp01(probs[c]);
                    }
                    infoLoss += ce * inv;
                    const back = aux.backward(tAux, gAuxOut);
                    accumulate(aGrads, back.grads, cfg.infoWeight * inv);
                    for (let i = 0; i < gImage.length; i++) {
                        gImage[i] += cfg.infoWeight * back.gIn[i];
                    }
                }
                accumulate(gGrads, gen.backward(tGen, gImage).grads, inv);
            }
            genOpt.step(gGrads);
            if (aux && auxOpt) auxOpt.step(aGrads);
            steps += 1;
        }
        lossTrace.push({ d: dLoss / steps, g: gLoss / steps, info: infoLoss / steps });
        if (!Number.isFinite(dLoss) || !Number.isFinite(gLoss)) {
            throw new Error(`training diverged at epoch ${epoch}`);
        }
    }

    // how often the auxiliary head recovers the code from a fresh generation
    let accuracy = 1;
    if (aux && codeStructured) {
        const evalRng = rng.substream(99);
        let hits = 0;
        const trials = 200;
        for (let t = 0; t < trials; t++) {
            const z = sampleLatent(layout, evalRng.substream(t));
            const probs = aux.forward(gen.forward(z));
            let best = 0;
            for (let c = 1; c < codeDim; c++) if (probs[c] > probs[best]) best = c;
            if (z[best] === 1) hits += 1;
        }
        accuracy = hits / trials;
    }
    return { generator: gen, layout, lossTrace, codePredictionAccuracy: accuracy };
}
