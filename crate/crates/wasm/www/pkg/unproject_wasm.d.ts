/* tslint:disable */
/* eslint-disable */

export class Explorer {
    free(): void;
    [Symbol.dispose](): void;
    agreement_map(resolution: number, a: number, b: number): Uint8Array;
    dim(): number;
    extent(): Float64Array;
    gradient_map(resolution: number): Uint8Array;
    infer(x: number, y: number): Float64Array;
    labels(): Uint32Array;
    constructor(kind: string, n: number, seed: number, max_epochs: number);
    /**
     * Flat `[x0, y0, x1, y1, ...]`.
     */
    points(): Float64Array;
    roundtrip_map(resolution: number): Uint8Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_explorer_free: (a: number, b: number) => void;
    readonly explorer_agreement_map: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly explorer_dim: (a: number) => number;
    readonly explorer_extent: (a: number) => [number, number];
    readonly explorer_gradient_map: (a: number, b: number) => [number, number, number, number];
    readonly explorer_infer: (a: number, b: number, c: number) => [number, number, number, number];
    readonly explorer_labels: (a: number) => [number, number];
    readonly explorer_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly explorer_points: (a: number) => [number, number];
    readonly explorer_roundtrip_map: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
