export type SearchMode = 'exact' | 'hamming' | 'two_stage'

export interface SearchRequest {
  vector?: number[]
  item_id?: number
  k?: number
  mode?: SearchMode
  metric?: string
}

export interface SearchHit {
  id: number
  label: number | null
  distance: number
  similarity: number
  pca?: [number, number]
}

export interface SearchResponse {
  query_ref: string
  hits: SearchHit[]
  took_s: number
}

export interface FeedbackRecord {
  query_ref: string
  result_id: number
  relevant: boolean
}

export interface IndexStats {
  count: number
  dim: number | null
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message)
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `HTTP ${resp.status}`
  try {
    const body = await resp.json()
    if (body && typeof body.error === 'string') message = body.error
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(resp.status, message)
}

export class SimsearchClient {
  constructor(private baseUrl: string = '') {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    let resp: Response
    try {
      resp = await fetch(this.baseUrl + path, {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(body),
      })
    } catch (err) {
      throw new ApiError(0, `backend unreachable: ${String(err)}`)
    }
    if (!resp.ok) throw await parseError(resp)
    return resp.json() as Promise<T>
  }

  search(request: SearchRequest): Promise<SearchResponse> {
    return this.post<SearchResponse>('/v1/search', request)
  }

  submitFeedback(records: FeedbackRecord[]): Promise<{ stored: number }> {
    return this.post<{ stored: number }>('/v1/feedback', records)
  }

  async stats(): Promise<IndexStats> {
    let resp: Response
    try {
      resp = await fetch(this.baseUrl + '/v1/stats')
    } catch (err) {
      throw new ApiError(0, `backend unreachable: ${String(err)}`)
    }
    if (!resp.ok) throw await parseError(resp)
    return resp.json() as Promise<IndexStats>
  }
}
