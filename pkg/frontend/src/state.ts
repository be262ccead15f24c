import type {
  DifferentialResponse,
  ExplanationResponse,
  ModuleDocument,
  ModuleSummary,
  RecommendationsResponse,
} from "./types.js";

// ViewState is a verbatim projection of API responses plus UI chrome
// (selection, search text, error banner). No field is ever computed from
// probabilities client-side.
export interface ViewState {
  modules: ModuleSummary[];
  selectedModule: string | null;
  moduleDoc: ModuleDocument | null;
  sessionId: string | null;
  contextDraft: string;
  differential: DifferentialResponse | null;
  recommendations: RecommendationsResponse | null;
  explanation: ExplanationResponse | null;
  transcriptRaw: string | null;
  findingSearch: string;
  enteredFindings: string[];
  error: string | null;
}

export function initialState(): ViewState {
  return {
    modules: [],
    selectedModule: null,
    moduleDoc: null,
    sessionId: null,
    contextDraft: "{}",
    differential: null,
    recommendations: null,
    explanation: null,
    transcriptRaw: null,
    findingSearch: "",
    enteredFindings: [],
    error: null,
  };
}

export function withModules(state: ViewState, modules: ModuleSummary[]): ViewState {
  return { ...state, modules, error: null };
}

export function withSession(
  state: ViewState,
  sessionId: string,
  moduleDoc: ModuleDocument,
): ViewState {
  return {
    ...state,
    sessionId,
    moduleDoc,
    differential: null,
    recommendations: null,
    explanation: null,
    transcriptRaw: null,
    enteredFindings: [],
    error: null,
  };
}

export function withDifferential(
  state: ViewState,
  differential: DifferentialResponse,
): ViewState {
  return { ...state, differential, error: null };
}

export function withRecommendations(
  state: ViewState,
  recommendations: RecommendationsResponse,
): ViewState {
  return { ...state, recommendations, error: null };
}

export function withExplanation(
  state: ViewState,
  explanation: ExplanationResponse | null,
): ViewState {
  return { ...state, explanation, error: null };
}

export function withTranscript(state: ViewState, transcriptRaw: string): ViewState {
  return { ...state, transcriptRaw, error: null };
}

export function withFindingEntered(state: ViewState, findingId: string): ViewState {
  return { ...state, enteredFindings: [...state.enteredFindings, findingId] };
}

export function withError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}

/** Findings still enterable, filtered by the search box. */
export function enterableFindings(state: ViewState): { id: string; name: string }[] {
  if (!state.moduleDoc) return [];
  const entered = new Set(state.enteredFindings);
  const needle = state.findingSearch.trim().toLowerCase();
  return state.moduleDoc.findings
    .filter((f) => !entered.has(f.id))
    .filter(
      (f) =>
        needle === "" ||
        f.id.toLowerCase().includes(needle) ||
        f.name.toLowerCase().includes(needle),
    )
    .map((f) => ({ id: f.id, name: f.name }));
}
