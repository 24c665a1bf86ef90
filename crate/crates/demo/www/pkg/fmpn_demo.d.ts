/* tslint:disable */
/* eslint-disable */

/**
 * Fixture text for the editor.
 */
export function parking_gate_source(): string;

/**
 * DOT text for a model at `full`, `no-transport` or `create-process`.
 */
export function render(model: string, level: string): string;

/**
 * Runs the timed vending machine on a schedule of `at <t> fire start|coin`
 * lines and reports events, power and clocks.
 */
export function timed_vending(schedule: string, horizon: number): string;

/**
 * Inserts coins (comma separated values), then selects `quantity` items
 * priced 5 each.
 */
export function vend(coins: string, quantity: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly parking_gate_source: () => [number, number];
    readonly render: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly timed_vending: (a: number, b: number, c: number) => [number, number, number, number];
    readonly vend: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
