import { ApiClient, ApiError } from "./api.js";
import {
  enterableFindings,
  initialState,
  withDifferential,
  withError,
  withExplanation,
  withFindingEntered,
  withModules,
  withRecommendations,
  withSession,
  withTranscript,
  type ViewState,
} from "./state.js";
import { renderApp } from "./render.js";

const RECOMMENDATION_COUNT = 5;

export class ConsoleApp {
  state: ViewState = initialState();

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
    private download: (filename: string, bytes: string) => void,
  ) {}

  render(): void {
    this.root.innerHTML = renderApp(this.state);
    this.bind();
  }

  private set(next: ViewState): void {
    this.state = next;
    this.render();
  }

  private fail(err: unknown): void {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.set(withError(this.state, message));
  }

  async start(): Promise<void> {
    try {
      this.set(withModules(this.state, await this.api.listModules()));
    } catch (err) {
      this.fail(err);
    }
  }

  async startSession(): Promise<void> {
    const moduleId = this.state.selectedModule;
    if (!moduleId) return;
    let context: Record<string, unknown>;
    try {
      context = this.state.contextDraft.trim()
        ? JSON.parse(this.state.contextDraft)
        : {};
    } catch (err) {
      this.fail(`context is not valid JSON: ${err}`);
      return;
    }
    try {
      const sessionId = await this.api.createSession(moduleId, context);
      const moduleDoc = await this.api.getModule(moduleId);
      this.set(withSession(this.state, sessionId, moduleDoc));
      await this.refreshDifferential();
      await this.refreshRecommendations();
    } catch (err) {
      this.fail(err);
    }
  }

  async refreshDifferential(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      this.set(
        withDifferential(
          this.state,
          await this.api.getDifferential(this.state.sessionId),
        ),
      );
    } catch (err) {
      this.fail(err);
    }
  }

  async refreshRecommendations(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      this.set(
        withRecommendations(
          this.state,
          await this.api.getRecommendations(this.state.sessionId, RECOMMENDATION_COUNT),
        ),
      );
    } catch (err) {
      this.fail(err);
    }
  }

  async enterFinding(findingId: string, state: "present" | "absent"): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      // The differential panel shows exactly what the server returned for
      // this mutation; recommendations are re-fetched, never extrapolated.
      const differential = await this.api.postFinding(
        this.state.sessionId,
        findingId,
        state,
      );
      this.set(
        withDifferential(withFindingEntered(this.state, findingId), differential),
      );
      await this.refreshRecommendations();
    } catch (err) {
      this.fail(err);
    }
  }

  async openExplanation(nodeId: string): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      this.set(
        withExplanation(
          this.state,
          await this.api.getExplanation(this.state.sessionId, nodeId),
        ),
      );
    } catch (err) {
      this.fail(err);
    }
  }

  async loadTranscript(): Promise<void> {
    if (!this.state.sessionId) return;
    try {
      this.set(
        withTranscript(
          this.state,
          await this.api.getTranscriptRaw(this.state.sessionId),
        ),
      );
    } catch (err) {
      this.fail(err);
    }
  }

  /** Hand the stored raw transcript bytes to the download sink, untouched. */
  exportTranscript(): void {
    if (this.state.transcriptRaw === null || !this.state.sessionId) return;
    this.download(`transcript-${this.state.sessionId}.json`, this.state.transcriptRaw);
  }

  private bind(): void {
    const select = this.root.querySelector<HTMLSelectElement>("#module-select");
    select?.addEventListener("change", () => {
      this.state = { ...this.state, selectedModule: select.value || null };
      this.render();
    });

    const context = this.root.querySelector<HTMLTextAreaElement>("#context-input");
    context?.addEventListener("change", () => {
      this.state = { ...this.state, contextDraft: context.value };
    });

    this.root
      .querySelector("#start-session")
      ?.addEventListener("click", () => void this.startSession());
    this.root
      .querySelector("#load-transcript")
      ?.addEventListener("click", () => void this.loadTranscript());
    this.root
      .querySelector("#export-transcript")
      ?.addEventListener("click", () => this.exportTranscript());

    const search = this.root.querySelector<HTMLInputElement>("#finding-search");
    search?.addEventListener("input", () => {
      this.state = { ...this.state, findingSearch: search.value };
      const options = this.root.querySelector(".finding-options");
      if (options) {
        options.innerHTML = enterableFindings(this.state)
          .map(
            (f) => `
            <div class="finding-option" data-finding-id="${f.id}">
              <span>${f.name}</span>
              <button data-action="enter-finding" data-finding-id="${f.id}" data-state="present">present</button>
              <button data-action="enter-finding" data-finding-id="${f.id}" data-state="absent">absent</button>
            </div>`,
          )
          .join("");
      }
    });

    for (const button of this.root.querySelectorAll<HTMLElement>("[data-action]")) {
      const action = button.dataset.action;
      if (action === "enter-finding") {
        button.addEventListener("click", () =>
          void this.enterFinding(
            button.dataset.findingId!,
            button.dataset.state as "present" | "absent",
          ),
        );
      } else if (action === "explain") {
        button.addEventListener("click", () =>
          void this.openExplanation(button.dataset.nodeId!),
        );
      } else if (action === "close-explanation") {
        button.addEventListener("click", () => {
          this.set(withExplanation(this.state, null));
        });
      }
    }
  }
}

export function browserDownload(filename: string, bytes: string): void {
  const blob = new Blob([bytes], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(url);
}

export function mount(root: HTMLElement, baseUrl: string): ConsoleApp {
  const app = new ConsoleApp(new ApiClient(baseUrl), root, browserDownload);
  app.render();
  void app.start();
  return app;
}

declare global {
  interface Window {
    __REKODX_NO_AUTOMOUNT?: boolean;
  }
}

if (typeof document !== "undefined" && !window.__REKODX_NO_AUTOMOUNT) {
  const root = document.getElementById("app");
  if (root) {
    mount(root, "");
  }
}
