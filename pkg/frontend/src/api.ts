/**
 * Typed client for the experiment service.
 *
 * Every call round-trips to the server; the client never computes or caches
 * authoritative game state. Server rejections surface as ApiError with the
 * structured error code, so the UI can show them without changing state.
 */

export interface TopologyJson {
  root: number;
  edges: Record<string, number[]>;
}

export interface TrialInfo {
  trial_index: number;
  n_trials: number;
  click_cost: number;
}

export interface SessionStart {
  session_id: string;
  participant_id: string;
  condition: string;
  reward_set: number[];
  click_cost: number;
  topology: TopologyJson;
  trial: TrialInfo;
}

export interface ClickResult {
  node: number;
  value: number;
  running_cost: number;
  trial_score: number;
  total_score: number;
}

export interface MoveResult {
  node_values_on_path: Record<string, number>;
  trial_score: number;
  total_score: number;
  next_trial?: TrialInfo;
  done?: boolean;
}

export interface ServerState {
  session_id: string;
  participant_id: string;
  condition: string;
  reward_set: number[];
  click_cost: number;
  topology: TopologyJson;
  trial_index: number;
  n_trials: number;
  revealed: Record<string, number>;
  clicks: number[];
  trial_cost: number;
  trial_score: number;
  total_score: number;
  terminated: boolean;
  finished: boolean;
  done_with_trials: boolean;
}

export interface FinishSummary {
  participant_id: string;
  n_trials: number;
  total_score: number;
  bonus_dollars: number;
  session_file?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const err = (body as { error?: { code?: string; message?: string } }).error;
    throw new ApiError(
      response.status,
      err?.code ?? "http_error",
      err?.message ?? `HTTP ${response.status}`,
    );
  }
  return body as T;
}

export class ExperimentApi {
  constructor(private baseUrl: string = "") {}

  createSession(options: { condition?: string; participant_id?: string } = {}) {
    return request<SessionStart>(`${this.baseUrl}/session`, {
      method: "POST",
      body: JSON.stringify(options),
    });
  }

  click(sessionId: string, node: number) {
    return request<ClickResult>(`${this.baseUrl}/session/${sessionId}/click`, {
      method: "POST",
      body: JSON.stringify({ node }),
    });
  }

  move(sessionId: string, path: number[]) {
    return request<MoveResult>(`${this.baseUrl}/session/${sessionId}/move`, {
      method: "POST",
      body: JSON.stringify({ path }),
    });
  }

  state(sessionId: string) {
    return request<ServerState>(`${this.baseUrl}/session/${sessionId}/state`);
  }

  finish(sessionId: string) {
    return request<FinishSummary>(`${this.baseUrl}/session/${sessionId}/finish`, {
      method: "POST",
    });
  }
}
