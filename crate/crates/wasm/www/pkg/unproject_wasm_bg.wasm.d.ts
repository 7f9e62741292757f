/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_explorer_free: (a: number, b: number) => void;
export const explorer_agreement_map: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const explorer_dim: (a: number) => number;
export const explorer_extent: (a: number) => [number, number];
export const explorer_gradient_map: (a: number, b: number) => [number, number, number, number];
export const explorer_infer: (a: number, b: number, c: number) => [number, number, number, number];
export const explorer_labels: (a: number) => [number, number];
export const explorer_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const explorer_points: (a: number) => [number, number];
export const explorer_roundtrip_map: (a: number, b: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
