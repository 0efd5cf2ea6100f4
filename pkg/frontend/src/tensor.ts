/** Seeded randomness and small dense-matrix helpers (Float64 throughout). */

const MASK64 = (1n << 64n) - 1n;

function splitmix64(state: bigint): bigint {
    let z = (state + 0x9e3779b97f4a7c15n) & MASK64;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return (z ^ (z >> 31n)) & MASK64;
}

/** Deterministic PRNG: splitmix64 stream mapped to [0, 1) doubles. */
export class Rng {
    private state: bigint;

    constructor(seed: number | bigint) {
        this.state = BigInt(seed) & MASK64;
    }

    substream(...indices: number[]): Rng {
        let s = this.state;
        for (const i of indices) {
            s = splitmix64(s ^ (BigInt(i) & MASK64));
        }
        return new Rng(s);
    }

    next(): number {
        this.state = splitmix64(this.state);
        return Number(this.state >> 11n) / 2 ** 53;
    }

    normal(): number {
        // Box-Muller; one value per call keeps the stream simple
        let u = 0;
        while (u === 0) u = this.next();
        return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * this.next());
    }

    int(bound: number): number {
        return Math.floor(this.next() * bound);
    }

    uniform(lo: number, hi: number): number {
        return lo + (hi - lo) * this.next();
    }
}

/** Row-major matrix of Float64 values. */
export class Matrix {
    constructor(
        public readonly rows: number,
        public readonly cols: number,
        public readonly data: Float64Array,
    ) {
        if (data.length !== rows * cols) {
            throw new Error(`matrix data length ${data.length} != ${rows}x${cols}`);
        }
    }

    static zeros(rows: number, cols: number): Matrix {
        return new Matrix(rows, cols, new Float64Array(rows * cols));
    }

    static identity(n: number): Matrix {
        const m = Matrix.zeros(n, n);
        for (let i = 0; i < n; i++) m.data[i * n + i] = 1;
        return m;
    }

    static random(rows: number, cols: number, scale: number, rng: Rng): Matrix {
        const data = new Float64Array(rows * cols);
        for (let i = 0; i < data.length; i++) data[i] = scale * rng.normal();
        return new Matrix(rows, cols, data);
    }

    get(i: number, j: number): number {
        return this.data[i * this.cols + j];
    }

    /** y = W x (+ optional bias). */
    apply(x: Float64Array, bias?: Float64Array): Float64Array {
        const out = new Float64Array(this.rows);
        for (let i = 0; i < this.rows; i++) {
            let acc = bias ? bias[i] : 0;
            const off = i * this.cols;
            for (let j = 0; j < this.cols; j++) acc += this.data[off + j] * x[j];
            out[i] = acc;
        }
        return out;
    }

    /** y = W^T x. */
    applyTransposed(x: Float64Array): Float64Array {
        const out = new Float64Array(this.cols);
        for (let i = 0; i < this.rows; i++) {
            const off = i * this.cols;
            const xi = x[i];
            for (let j = 0; j < this.cols; j++) out[j] += this.data[off + j] * xi;
        }
        return out;
    }
}

export function l2(a: Float64Array, b: Float64Array): number {
    let acc = 0;
    for (let i = 0; i < a.length; i++) {
        const d = a[i] - b[i];
        acc += d * d;
    }
    return Math.sqrt(acc);
}

export function norm(a: Float64Array): number {
    let acc = 0;
    for (let i = 0; i < a.length; i++) acc += a[i] * a[i];
    return Math.sqrt(acc);
}
