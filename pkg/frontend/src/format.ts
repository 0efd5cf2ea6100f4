/** Binary export formats shared with the recovery toolkit.
 *
 *  FCW1 weight file: magic "FCW1"; u32 layer_count; per layer u32 out_dim,
 *  u32 in_dim, u32 activation_id (0..3), out*in f32 weights row-major, out
 *  f32 biases; u32 block_count; per block u32 offset, u32 length, u32
 *  activation_id (4 allowed only here); latent layout: u32 group_count,
 *  per-group u32 class count, u32 continuous, u32 v_dim, f32 r_c, f32 r_v.
 *  All little-endian. No trailing bytes.
 *
 *  FIM1 image archive: magic "FIM1", u32 count, u32 dim, count*dim f32.
 *
 *  Manifest: plain text key=value lines with sha256.<file> content digests.
 */

import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

import { Act, LatentLayout, Mlp, OutputBlock } from "./mlp.js";
import { Matrix } from "./tensor.js";

class ByteWriter {
    private chunks: Buffer[] = [];

    u32(v: number): void {
        const b = Buffer.alloc(4);
        b.writeUInt32LE(v >>> 0);
        this.chunks.push(b);
    }

    f32(v: number): void {
        const b = Buffer.alloc(4);
        b.writeFloatLE(v);
        this.chunks.push(b);
    }

    f32Array(values: Float64Array): void {
        const b = Buffer.alloc(4 * values.length);
        for (let i = 0; i < values.length; i++) b.writeFloatLE(values[i], 4 * i);
        this.chunks.push(b);
    }

    raw(b: Buffer): void {
        this.chunks.push(b);
    }

    bytes(): Buffer {
        return Buffer.concat(this.chunks);
    }
}

class ByteReader {
    private pos = 0;

    constructor(private readonly buf: Buffer) {}

    private need(n: number, what: string): void {
        if (this.pos + n > this.buf.length) {
            throw new Error(`truncated file: expected ${this.pos + n} bytes through ${what}, have ${this.buf.length}`);
        }
    }

    u32(what: string): number {
        this.need(4, what);
        const v = this.buf.readUInt32LE(this.pos);
        this.pos += 4;
        return v;
    }

    f32(what: string): number {
        this.need(4, what);
        const v = this.buf.readFloatLE(this.pos);
        this.pos += 4;
        return v;
    }

    f32Array(count: number, what: string): Float64Array {
        this.need(4 * count, what);
        const out = new Float64Array(count);
        for (let i = 0; i < count; i++) out[i] = this.buf.readFloatLE(this.pos + 4 * i);
        this.pos += 4 * count;
        return out;
    }

    magic(expected: string): void {
        this.need(4, "magic");
        const got = this.buf.subarray(this.pos, this.pos + 4).toString("latin1");
        if (got !== expected) {
            throw new Error(`bad magic at offset 0: ${JSON.stringify(got)} != ${expected}`);
        }
        this.pos += 4;
    }

    done(): void {
        if (this.pos !== this.buf.length) {
            throw new Error(`trailing bytes: file has ${this.buf.length}, payload ends at ${this.pos}`);
        }
    }
}

export function encodeWeights(net: Mlp, layout: LatentLayout | null): Buffer {
    const w = new ByteWriter();
    w.raw(Buffer.from("FCW1", "latin1"));
    w.u32(net.layers.length);
    for (const layer of net.layers) {
        if (layer.act === Act.Softmax) throw new Error("softmax layer is not storable");
        w.u32(layer.weights.rows);
        w.u32(layer.weights.cols);
        w.u32(layer.act);
        w.f32Array(layer.weights.data);
        w.f32Array(layer.bias);
    }
    w.u32(net.blocks.length);
    for (const b of net.blocks) {
        w.u32(b.offset);
        w.u32(b.length);
        w.u32(b.act);
    }
    if (layout === null) {
        w.u32(0);
        w.u32(0);
        w.u32(0);
        w.f32(1);
        w.f32(1);
    } else {
        w.u32(layout.groups.length);
        for (const g of layout.groups) w.u32(g);
        w.u32(layout.continuous);
        w.u32(layout.vDim);
        w.f32(layout.rC);
        w.f32(layout.rV);
    }
    return w.bytes();
}

export function decodeWeights(buf: Buffer): { net: Mlp; layout: LatentLayout | null } {
    const r = new ByteReader(buf);
    r.magic("FCW1");
    const layerCount = r.u32("layer count");
    const layers = [];
    for (let k = 0; k < layerCount; k++) {
        const outDim = r.u32(`layer ${k} out_dim`);
        const inDim = r.u32(`layer ${k} in_dim`);
        const act = r.u32(`layer ${k} activation`);
        if (act > 3) throw new Error(`unknown layer activation id ${act}`);
        const weights = new Matrix(outDim, inDim, r.f32Array(outDim * inDim, `layer ${k} weights`));
        const bias = r.f32Array(outDim, `layer ${k} biases`);
        layers.push({ weights, bias, act: act as Act });
    }
    const blockCount = r.u32("block count");
    const blocks: OutputBlock[] = [];
    for (let k = 0; k < blockCount; k++) {
        const offset = r.u32(`block ${k} offset`);
        const length = r.u32(`block ${k} length`);
        const act = r.u32(`block ${k} activation`);
        if (act > 4) throw new Error(`unknown block activation id ${act}`);
        blocks.push({ offset, length, act: act as Act });
    }
    const groupCount = r.u32("layout group count");
    const groups = [];
    for (let k = 0; k < groupCount; k++) groups.push(r.u32(`layout group ${k}`));
    const continuous = r.u32("layout continuous");
    const vDim = r.u32("layout v_dim");
    const rC = r.f32("layout r_c");
    const rV = r.f32("layout r_v");
    r.done();
    const net = new Mlp(layers, blocks);
    const layout = groupCount === 0 && continuous === 0 && vDim === 0
        ? null
        : { groups, continuous, vDim, rC, rV };
    return { net, layout };
}

export function encodeImageArchive(vectors: Float64Array[], dim: number): Buffer {
    const w = new ByteWriter();
    w.raw(Buffer.from("FIM1", "latin1"));
    w.u32(vectors.length);
    w.u32(dim);
    for (const v of vectors) {
        if (v.length !== dim) throw new Error(`vector length ${v.length} != dim ${dim}`);
        w.f32Array(v);
    }
    return w.bytes();
}

export function decodeImageArchive(buf: Buffer): { dim: number; vectors: Float64Array[] } {
    const r = new ByteReader(buf);
    r.magic("FIM1");
    const count = r.u32("count");
    const dim = r.u32("dim");
    const vectors = [];
    for (let i = 0; i < count; i++) vectors.push(r.f32Array(dim, `vector ${i}`));
    r.done();
    return { dim, vectors };
}

export function sha256Hex(data: Buffer): string {
    return createHash("sha256").update(data).digest("hex");
}

export function writeManifest(path: string, meta: Record<string, string | number>,
                              digests: Record<string, Buffer>): void {
    const lines = Object.entries(meta).map(([k, v]) => `${k}=${v}`);
    for (const [name, data] of Object.entries(digests)) {
        lines.push(`sha256.${name}=${sha256Hex(data)}`);
    }
    writeFileSync(path, lines.join("\n") + "\n");
}

export function readManifest(path: string): Record<string, string> {
    const out: Record<string, string> = {};
    for (const line of readFileSync(path, "utf8").split("\n")) {
        if (!line.trim()) continue;
        const eq = line.indexOf("=");
        if (eq < 0) throw new Error(`manifest line without '=': ${line}`);
        out[line.slice(0, eq)] = line.slice(eq + 1);
    }
    return out;
}
