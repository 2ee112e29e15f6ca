import { ApiError, SimsearchClient } from './api'
import type { SearchResponse } from './api'
import { clearError, renderGrid, showError, showStatus } from './grid'
import { DEFAULT_STATE, decodeState, encodeState, parseSeed, RequestSequencer } from './state'
import type { ViewState } from './state'

const client = new SimsearchClient('')
const sequencer = new RequestSequencer()

let lastResponse: SearchResponse | null = null
const selections = new Set<number>()

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function currentState(): ViewState {
  return {
    seed: el<HTMLInputElement>('seed').value,
    k: Number(el<HTMLInputElement>('k').value) || DEFAULT_STATE.k,
    mode: el<HTMLSelectElement>('mode').value as ViewState['mode'],
  }
}

function applyState(state: ViewState): void {
  el<HTMLInputElement>('seed').value = state.seed
  el<HTMLInputElement>('k').value = String(state.k)
  el<HTMLSelectElement>('mode').value = state.mode
}

async function runSearch(): Promise<void> {
  const banner = el('error-banner')
  const state = currentState()
  history.replaceState(null, '', `?${encodeState(state)}`)

  let seed
  try {
    seed = parseSeed(state.seed)
  } catch (err) {
    showError(banner, (err as Error).message)
    return
  }

  const token = sequencer.next()
  clearError(banner)
  showStatus(el('status'), 'searching…')
  try {
    const response = await client.search({ ...seed, k: state.k, mode: state.mode })
    if (!sequencer.isCurrent(token)) return // superseded by a newer search
    lastResponse = response
    selections.clear()
    renderGrid(el('grid'), response.hits, selections, (id, checked) => {
      if (checked) selections.add(id)
      else selections.delete(id)
    })
    showStatus(el('status'), `${response.hits.length} results in ${(response.took_s * 1000).toFixed(2)} ms`)
  } catch (err) {
    if (!sequencer.isCurrent(token)) return
    lastResponse = null
    renderGrid(el('grid'), [], selections, () => undefined)
    showError(banner, err instanceof ApiError ? `search failed: ${err.message}` : String(err))
    showStatus(el('status'), '')
  }
}

async function submitFeedback(): Promise<void> {
  const banner = el('error-banner')
  if (!lastResponse) {
    showError(banner, 'run a search before submitting feedback')
    return
  }
  if (selections.size === 0) {
    showStatus(el('feedback-status'), 'tick at least one relevant result first')
    return
  }
  const queryRef = lastResponse.query_ref
  const records = Array.from(selections).map((id) => ({
    query_ref: queryRef,
    result_id: id,
    relevant: true,
  }))
  try {
    const result = await client.submitFeedback(records)
    showStatus(el('feedback-status'), `stored ${result.stored}`)
    clearError(banner)
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      showError(banner, 'this result set expired on the server; search again to give feedback')
    } else {
      showError(banner, `feedback failed: ${String(err instanceof ApiError ? err.message : err)}`)
    }
  }
}

export function boot(): void {
  applyState(decodeState(location.search))
  // The submit button triggers this too; a separate click handler would
  // double-fire every search.
  el<HTMLFormElement>('search-form').addEventListener('submit', (ev) => {
    ev.preventDefault()
    void runSearch()
  })
  el('feedback-btn').addEventListener('click', () => void submitFeedback())
  if (decodeState(location.search).seed) void runSearch()
}

function autoBoot(): void {
  if (document.getElementById('search-form')) boot()
}

if (typeof document !== 'undefined') {
  if (document.readyState !== 'loading') autoBoot()
  else document.addEventListener('DOMContentLoaded', autoBoot)
}
