import type {
  ConstraintDoc,
  DemoDoc,
  ErrorBody,
  FitResponse,
  KeypointDoc,
  ObjectDoc,
  PoseDoc,
  SolveResponse,
  WhatIfResponse,
  WorkspaceDoc,
  WorkspaceResponse,
} from "./types.js";

/**
 * Error raised for any non-2xx service response.  `code` is the machine
 * -readable domain code from the body ("conflict", "not_found", ...) so
 * callers can branch without string-matching messages.
 */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: unknown;

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.details = body.details;
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SolveRequest {
  demo_id: string;
  revision?: number;
  chain_id?: string;
  segment?: boolean;
  fit?: Record<string, unknown>;
  solve?: Record<string, unknown>;
}

export interface WhatIfRequest {
  chain_id: string;
  start?: [number, number, number];
  object_poses?: Record<string, PoseDoc>;
  goal_overrides?: Record<string, [number, number, number]>;
  constraints_follow_object?: string[];
  dt?: number;
}

/**
 * Thin typed client over the workspace service.  One instance per base URL;
 * the fetch implementation is injectable so tests can run without a network.
 */
export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let parsed: ErrorBody;
      try {
        parsed = (await resp.json()) as ErrorBody;
      } catch {
        parsed = { code: "unknown", message: `HTTP ${resp.status}` };
      }
      throw new ApiError(resp.status, parsed);
    }
    return (await resp.json()) as T;
  }

  createWorkspace(id: string): Promise<{ id: string; revision: number }> {
    return this.request("POST", "/workspaces", { id });
  }

  getWorkspace(id: string): Promise<WorkspaceResponse> {
    return this.request("GET", `/workspaces/${encodeURIComponent(id)}`);
  }

  putWorkspace(id: string, revision: number, workspace: WorkspaceDoc): Promise<{ revision: number }> {
    return this.request("PUT", `/workspaces/${encodeURIComponent(id)}`, { revision, workspace });
  }

  putDemonstrations(
    id: string,
    revision: number,
    demonstrations: Record<string, DemoDoc>,
  ): Promise<{ revision: number }> {
    return this.request("PUT", `/workspaces/${encodeURIComponent(id)}/demonstrations`, {
      revision,
      demonstrations,
    });
  }

  putConstraints(id: string, revision: number, constraints: ConstraintDoc[]): Promise<{ revision: number }> {
    return this.request("PUT", `/workspaces/${encodeURIComponent(id)}/constraints`, {
      revision,
      constraints,
    });
  }

  putObjects(id: string, revision: number, objects: Record<string, ObjectDoc>): Promise<{ revision: number }> {
    return this.request("PUT", `/workspaces/${encodeURIComponent(id)}/objects`, { revision, objects });
  }

  putKeypoints(
    id: string,
    revision: number,
    keypoints: Record<string, KeypointDoc[]>,
  ): Promise<{ revision: number }> {
    return this.request("PUT", `/workspaces/${encodeURIComponent(id)}/keypoints`, { revision, keypoints });
  }

  fit(id: string, demoId: string, options?: Record<string, unknown>): Promise<FitResponse> {
    return this.request("POST", `/workspaces/${encodeURIComponent(id)}/fit`, {
      demo_id: demoId,
      ...options,
    });
  }

  solve(id: string, req: SolveRequest): Promise<SolveResponse> {
    return this.request("POST", `/workspaces/${encodeURIComponent(id)}/solve`, req);
  }

  whatIf(id: string, req: WhatIfRequest): Promise<WhatIfResponse> {
    return this.request("POST", `/workspaces/${encodeURIComponent(id)}/rollout`, req);
  }

  exportCsv(id: string, chainId: string): Promise<string> {
    return this.fetchImpl(
      `${this.base}/workspaces/${encodeURIComponent(id)}/export/${encodeURIComponent(chainId)}.csv`,
    ).then(async (resp) => {
      if (!resp.ok) {
        throw new ApiError(resp.status, (await resp.json()) as ErrorBody);
      }
      return resp.text();
    });
  }
}
