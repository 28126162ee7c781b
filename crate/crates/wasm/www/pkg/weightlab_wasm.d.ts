/* tslint:disable */
/* eslint-disable */

/**
 * Lower and upper boundary heights at each `x`, interleaved.
 */
export function domain_bounds(kind: string, q: number, xs: Float64Array): Float64Array;

/**
 * Builds an extremal weight. Glued families take their target at `m w = x`
 * and relative height `theta` in the domain.
 */
export function extremal(family: string, q: number, x: number, theta: number, points: number): string;

/**
 * Every root and ratio at `q`, as JSON.
 */
export function solve(q: number): string;

/**
 * Surface values on a `width × height` pixel grid over
 * `[x_min, x_max] × [y_min, y_max]`, rows from the top; `NaN` outside the
 * domain.
 */
export function surface_values(kind: string, q: number, eps_fraction: number, x_min: number, x_max: number, y_min: number, y_max: number, width: number, height: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly domain_bounds: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly extremal: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly solve: (a: number) => [number, number, number, number];
    readonly surface_values: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
