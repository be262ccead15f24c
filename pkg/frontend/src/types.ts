// Shapes of the HTTP API responses. The UI stores and renders these verbatim;
// it never computes probabilities of its own.

export interface ModuleSummary {
  id: string;
  name: string;
  domain: string;
  version: string;
}

export interface DifferentialEntry {
  node_id: string;
  name: string;
  posterior: number;
  status: string; // "active" | "confirmed" | "rejected"
}

export interface Verdict {
  constraint_id: string;
  node_id: string;
  outcome: string; // "veto" | "warn"
  message: string;
}

export interface Goal {
  node_id: string;
  mode: string; // "confirm" | "explore"
}

export interface StepStatus {
  state: string; // "continue" | "done"
  reason: string | null;
}

export interface DifferentialResponse {
  differential: DifferentialEntry[];
  vetoed: DifferentialEntry[];
  verdicts: Verdict[];
  goal: Goal | null;
  status: StepStatus;
  step_count: number;
}

export interface Recommendation {
  finding_id: string;
  name: string;
  gain: number;
  cost: number;
  score: number;
}

export interface RecommendationsResponse {
  recommendations: Recommendation[];
  goal: Goal | null;
  status: StepStatus;
}

export interface ExplanationEntry {
  finding_id: string;
  state: string;
  likelihood_ratio: number;
  log_lr: number;
}

export interface ExplanationResponse {
  node_id: string;
  name: string;
  prior: number;
  posterior: number;
  entries: ExplanationEntry[];
}

export interface ModuleDocument {
  id: string;
  name: string;
  findings: { id: string; name: string; cost: number }[];
  [key: string]: unknown;
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
