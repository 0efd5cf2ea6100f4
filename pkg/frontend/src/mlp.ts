/** Dense feed-forward networks with backprop, in the export-format dialect:
 *  per-layer activations identity/relu/tanh/sigmoid plus softmax output
 *  blocks. Only architectures expressible in the weight file are allowed. */

import { Matrix, Rng } from "./tensor.js";

export enum Act {
    Identity = 0,
    Relu = 1,
    Tanh = 2,
    Sigmoid = 3,
    Softmax = 4, // output blocks only
}

export interface Layer {
    weights: Matrix;
    bias: Float64Array;
    act: Act;
}

export interface OutputBlock {
    offset: number;
    length: number;
    act: Act;
}

export interface LatentLayout {
    groups: number[];
    continuous: number;
    vDim: number;
    rC: number;
    rV: number;
}

export class Mlp {
    constructor(
        public readonly layers: Layer[],
        public readonly blocks: OutputBlock[],
    ) {
        let cursor = 0;
        for (const b of blocks) {
            if (b.offset !== cursor || b.length < 1) {
                throw new Error("output blocks must tile the output contiguously");
            }
            cursor = b.offset + b.length;
        }
        const out = layers[layers.length - 1].weights.rows;
        if (cursor !== out) throw new Error(`blocks cover ${cursor}, output is ${out}`);
    }

    get inDim(): number {
        return this.layers[0].weights.cols;
    }

    get outDim(): number {
        return this.layers[this.layers.length - 1].weights.rows;
    }

    forward(x: Float64Array): Float64Array {
        return this.forwardTrace(x).output;
    }

    /** Keeps pre/post activations for the backward pass. */
    forwardTrace(x: Float64Array) {
        const pre: Float64Array[] = [];
        const post: Float64Array[] = [x];
        let a = x;
        for (const layer of this.layers) {
            const z = layer.weights.apply(a, layer.bias);
            pre.push(z);
            a = activate(layer.act, z);
            post.push(a);
        }
        const output = applyBlocks(this.blocks, a);
        return { pre, post, output };
    }

    /** Backprop a cotangent on the block output; returns per-layer gradients
     *  and the input gradient. */
    backward(trace: { pre: Float64Array[]; post: Float64Array[]; output: Float64Array },
             gOut: Float64Array) {
        let g = blocksVjp(this.blocks, trace.post[this.layers.length], trace.output, gOut);
        const grads: { dW: Float64Array; db: Float64Array }[] = [];
        for (let k = this.layers.length - 1; k >= 0; k--) {
            const layer = this.layers[k];
            const gz = new Float64Array(g.length);
            const deriv = actDeriv(layer.act, trace.pre[k], trace.post[k + 1]);
            for (let i = 0; i < g.length; i++) gz[i] = g[i] * deriv[i];
            const aPrev = trace.post[k];
            const dW = new Float64Array(layer.weights.data.length);
            for (let i = 0; i < layer.weights.rows; i++) {
                const off = i * layer.weights.cols;
                for (let j = 0; j < layer.weights.cols; j++) {
                    dW[off + j] = gz[i] * aPrev[j];
                }
            }
            grads.unshift({ dW, db: gz });
            g = layer.weights.applyTransposed(gz);
        }
        return { grads, gIn: g };
    }
}

function activate(act: Act, z: Float64Array): Float64Array {
    const out = new Float64Array(z.length);
    switch (act) {
        case Act.Identity:
            out.set(z);
            break;
        case Act.Relu:
            for (let i = 0; i < z.length; i++) out[i] = z[i] > 0 ? z[i] : 0;
            break;
        case Act.Tanh:
            for (let i = 0; i < z.length; i++) out[i] = Math.tanh(z[i]);
            break;
        case Act.Sigmoid:
            for (let i = 0; i < z.length; i++) out[i] = 1 / (1 + Math.exp(-z[i]));
            break;
        default:
            throw new Error("softmax is not a per-layer activation");
    }
    return out;
}

function actDeriv(act: Act, z: Float64Array, a: Float64Array): Float64Array {
    const out = new Float64Array(z.length);
    switch (act) {
        case Act.Identity:
            out.fill(1);
            break;
        case Act.Relu:
            for (let i = 0; i < z.length; i++) out[i] = z[i] > 0 ? 1 : 0;
            break;
        case Act.Tanh:
            for (let i = 0; i < z.length; i++) out[i] = 1 - a[i] * a[i];
            break;
        case Act.Sigmoid:
            for (let i = 0; i < z.length; i++) out[i] = a[i] * (1 - a[i]);
            break;
        default:
            throw new Error("softmax is not a per-layer activation");
    }
    return out;
}

export function applyBlocks(blocks: OutputBlock[], u: Float64Array): Float64Array {
    const out = Float64Array.from(u);
    for (const b of blocks) {
        if (b.act === Act.Softmax) {
            let max = -Infinity;
            for (let i = 0; i < b.length; i++) max = Math.max(max, u[b.offset + i]);
            let sum = 0;
            for (let i = 0; i < b.length; i++) {
                out[b.offset + i] = Math.exp(u[b.offset + i] - max);
                sum += out[b.offset + i];
            }
            for (let i = 0; i < b.length; i++) out[b.offset + i] /= sum;
        } else if (b.act !== Act.Identity) {
            const seg = activate(b.act, u.slice(b.offset, b.offset + b.length));
            out.set(seg, b.offset);
        }
    }
    return out;
}

function blocksVjp(blocks: OutputBlock[], u: Float64Array, o: Float64Array,
                   gOut: Float64Array): Float64Array {
    const g = Float64Array.from(gOut);
    for (const b of blocks) {
        if (b.act === Act.Identity) continue;
        if (b.act === Act.Softmax) {
            let dot = 0;
            for (let i = 0; i < b.length; i++) dot += gOut[b.offset + i] * o[b.offset + i];
            for (let i = 0; i < b.length; i++) {
                g[b.offset + i] = o[b.offset + i] * (gOut[b.offset + i] - dot);
            }
        } else {
            const seg = actDeriv(b.act, u.slice(b.offset, b.offset + b.length),
                                 o.slice(b.offset, b.offset + b.length));
            for (let i = 0; i < b.length; i++) g[b.offset + i] = gOut[b.offset + i] * seg[i];
        }
    }
    return g;
}

/** He-uniform for relu layers, Xavier-uniform otherwise. */
export function initMlp(dims: number[], acts: Act[], blocks: OutputBlock[] | null,
                        rng: Rng): Mlp {
    const layers: Layer[] = [];
    for (let k = 0; k < acts.length; k++) {
        const fanIn = dims[k];
        const fanOut = dims[k + 1];
        const limit = acts[k] === Act.Relu
            ? Math.sqrt(6 / fanIn)
            : Math.sqrt(6 / (fanIn + fanOut));
        const data = new Float64Array(fanOut * fanIn);
        for (let i = 0; i < data.length; i++) data[i] = rng.uniform(-limit, limit);
        layers.push({
            weights: new Matrix(fanOut, fanIn, data),
            bias: new Float64Array(fanOut),
            act: acts[k],
        });
    }
    const out = dims[dims.length - 1];
    return new Mlp(layers, blocks ?? [{ offset: 0, length: out, act: Act.Identity }]);
}

/** Adam over a flat list of parameter arrays. */
export class Adam {
    private m: Float64Array[];
    private v: Float64Array[];
    private t = 0;

    constructor(
        private readonly params: Float64Array[],
        private readonly lr: number,
        private readonly beta1 = 0.9,
        private readonly beta2 = 0.999,
        private readonly eps = 1e-8,
    ) {
        this.m = params.map((p) => new Float64Array(p.length));
        this.v = params.map((p) => new Float64Array(p.length));
    }

    step(grads: Float64Array[]): void {
        this.t += 1;
        const bc1 = 1 - this.beta1 ** this.t;
        const bc2 = 1 - this.beta2 ** this.t;
        for (let k = 0; k < this.params.length; k++) {
            const p = this.params[k];
            const g = grads[k];
            const m = this.m[k];
            const v = this.v[k];
            for (let i = 0; i < p.length; i++) {
                m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
                v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
                p[i] -= this.lr * (m[i] / bc1) / (Math.sqrt(v[i] / bc2) + this.eps);
            }
        }
    }
}

export function mlpParams(net: Mlp): Float64Array[] {
    const out: Float64Array[] = [];
    for (const layer of net.layers) {
        out.push(layer.weights.data, layer.bias);
    }
    return out;
}
