// Page bootstrap: wire the form, session, history pane, and health banner.

import { ApiClient, resolveBaseUrl } from "./api";
import { renderBanner, renderHistory } from "./render";
import { ChatSession } from "./session";

export interface AppElements {
  banner: HTMLElement;
  history: HTMLElement;
  form: HTMLFormElement;
  questionInput: HTMLInputElement;
  kInput: HTMLInputElement;
  submitButton: HTMLButtonElement;
  validation: HTMLElement;
}

export class App {
  private readonly session: ChatSession;

  constructor(
    private readonly elements: AppElements,
    private readonly api: ApiClient,
  ) {
    this.session = new ChatSession(api);
    elements.form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitFromForm();
    });
  }

  async refreshBanner(): Promise<void> {
    try {
      const health = await this.api.health();
      renderBanner(this.elements.banner, { kind: "ok", health });
    } catch (err) {
      const status = (err as { status?: number }).status;
      renderBanner(this.elements.banner, status === 503 ? { kind: "starting" } : { kind: "offline" });
    }
  }

  async submitFromForm(): Promise<void> {
    const question = this.elements.questionInput.value;
    if (!question.trim()) {
      this.elements.validation.textContent = "enter a question first";
      return;
    }
    const kRaw = this.elements.kInput.value.trim();
    const k = kRaw ? Number(kRaw) : undefined;
    if (k !== undefined && (!Number.isInteger(k) || k < 1)) {
      this.elements.validation.textContent = "k must be a positive integer";
      return;
    }
    await this.submit(question, k);
  }

  async submit(question: string, k?: number): Promise<void> {
    if (this.session.pending) return;
    this.elements.validation.textContent = "";
    this.elements.submitButton.disabled = true;
    try {
      const turn = await this.session.submit(question, k);
      if (turn.error && turn.error.error_code === "EMPTY_QUESTION") {
        this.elements.validation.textContent = turn.error.message;
      }
      this.elements.questionInput.value = "";
    } finally {
      this.elements.submitButton.disabled = false;
      this.renderHistory();
    }
  }

  renderHistory(): void {
    renderHistory(this.elements.history, this.session.history, (turn) => {
      void this.submit(turn.question);
    });
  }

  get turns() {
    return this.session.history;
  }
}

export function mount(root: Document = document): App {
  const get = <T extends HTMLElement>(id: string) => root.getElementById(id) as T;
  const app = new App(
    {
      banner: get("banner"),
      history: get("history"),
      form: get<HTMLFormElement>("ask-form"),
      questionInput: get<HTMLInputElement>("question"),
      kInput: get<HTMLInputElement>("k"),
      submitButton: get<HTMLButtonElement>("submit"),
      validation: get("validation"),
    },
    new ApiClient(resolveBaseUrl()),
  );
  void app.refreshBanner();
  return app;
}

declare global {
  interface Window {
    avllmApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("ask-form")) {
  window.avllmApp = mount();
}
