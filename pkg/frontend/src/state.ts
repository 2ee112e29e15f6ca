import type { SearchMode, SearchRequest } from './api'

export interface ViewState {
  seed: string
  k: number
  mode: SearchMode
}

export const DEFAULT_STATE: ViewState = { seed: '', k: 10, mode: 'exact' }

const MODES: SearchMode[] = ['exact', 'hamming', 'two_stage']

/** Everything needed to reproduce the view lives in the URL query. */
export function encodeState(state: ViewState): string {
  const params = new URLSearchParams()
  if (state.seed) params.set('seed', state.seed)
  params.set('k', String(state.k))
  params.set('mode', state.mode)
  return params.toString()
}

export function decodeState(query: string): ViewState {
  const params = new URLSearchParams(query)
  const k = Number(params.get('k') ?? DEFAULT_STATE.k)
  const mode = params.get('mode') as SearchMode | null
  return {
    seed: params.get('seed') ?? '',
    k: Number.isInteger(k) && k >= 1 ? k : DEFAULT_STATE.k,
    mode: mode && MODES.includes(mode) ? mode : DEFAULT_STATE.mode,
  }
}

/**
 * Interpret the seed box: a bare integer queries by item id, anything
 * else is parsed as a comma/whitespace separated vector.
 */
export function parseSeed(raw: string): Pick<SearchRequest, 'vector' | 'item_id'> {
  const trimmed = raw.trim()
  if (trimmed === '') throw new Error('enter a seed item id or a vector')
  if (/^\d+$/.test(trimmed)) return { item_id: Number(trimmed) }
  const parts = trimmed.split(/[\s,]+/).filter((p) => p.length > 0)
  const vector = parts.map(Number)
  if (vector.length < 2 || vector.some((v) => !Number.isFinite(v))) {
    throw new Error('vector must be two or more comma-separated numbers')
  }
  return { vector }
}

/** Discards responses of superseded requests: only one search "wins". */
export class RequestSequencer {
  private current = 0

  next(): number {
    this.current += 1
    return this.current
  }

  isCurrent(token: number): boolean {
    return token === this.current
  }
}
