// JSON shapes as the service sends them.  The workbench never invents any of
// these values — every trajectory, clearance number, and report field shown on
// screen is copied out of a response body.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export interface PoseDoc {
  rotation: Quat;
  translation: Vec3;
}

// A demo sample row is [t, x, y, z] or [t, x, y, z, qw, qx, qy, qz].
export type DemoSample = number[];

export interface DemoDoc {
  id: string;
  frame: string;
  samples: DemoSample[];
}

export interface SphereDoc {
  id: string;
  type: "sphere";
  margin: number;
  center: Vec3;
  radius: number;
}

export interface BoxDoc {
  id: string;
  type: "box";
  margin: number;
  pose: PoseDoc;
  half_extents: Vec3;
}

export type ConstraintDoc = SphereDoc | BoxDoc;

export interface ObjectDoc {
  id: string;
  pose: PoseDoc;
  display_extent: Vec3;
}

export interface KeypointDoc {
  time: number;
  label: string;
}

export interface WorkspaceDoc {
  schema_version: number;
  id: string;
  demonstrations: Record<string, DemoDoc>;
  constraints: ConstraintDoc[];
  objects: Record<string, ObjectDoc>;
  keypoints: Record<string, KeypointDoc[]>;
  chains: Record<string, ChainDoc>;
  default_params: {
    fit: Record<string, unknown>;
    solve: Record<string, unknown>;
  };
}

export interface ChainSegmentDoc {
  frame: string;
  start_in_frame: Vec3;
  goal_in_frame: Vec3;
  cdmp: Record<string, unknown>;
}

export interface ChainDoc {
  id: string;
  segments: ChainSegmentDoc[];
  horizons: number[];
}

export interface ReportDoc {
  converged: boolean;
  iterations: number;
  objective: number;
  max_violation: number;
  fine_check_violation: number;
  wall_time: number;
  notes: string[];
  violation_history: number[];
}

export interface TrajectoryDoc {
  dt: number;
  tau: number;
  frame: string;
  times: number[];
  positions: Vec3[];
  velocities: Vec3[];
  // present only when the workspace has constraints
  min_sdf?: number[];
  violating_region?: string[];
}

export interface FitResponse {
  revision: number;
  demo_id: string;
  rmse: number;
  dmp: Record<string, unknown>;
  rollout: TrajectoryDoc;
}

export interface SolveResponse {
  revision: number;
  chain_id: string;
  chain: ChainDoc;
  reports: ReportDoc[];
  rollout: TrajectoryDoc;
}

export interface WhatIfResponse {
  revision: number;
  rollout: TrajectoryDoc;
}

export interface WorkspaceResponse {
  revision: number;
  workspace: WorkspaceDoc;
}

export interface ErrorBody {
  code: string;
  message: string;
  details?: unknown;
}
