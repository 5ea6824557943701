/**
 * Application wiring: one session per tab, server round-trip before every
 * reveal, resume from the server after a reload.
 */

import { ApiError, ExperimentApi } from "./api.js";
import {
  applyClick,
  applyMove,
  bonusDollars,
  canClick,
  draftBack,
  draftByArrow,
  draftComplete,
  draftToward,
  fromServerState,
  fromSessionStart,
  withToast,
  type ViewModel,
} from "./model.js";
import { renderBanner, renderControls, renderMaze, renderSummary, renderToast } from "./render.js";

const api = new ExperimentApi("");
const STORAGE_KEY = "metaplan-session-id";

let vm: ViewModel | null = null;
let toastTimer: number | undefined;

function rerender(): void {
  if (!vm) return;
  const svg = document.getElementById("maze") as unknown as SVGSVGElement;
  renderBanner(vm, document.getElementById("banner")!);
  renderMaze(vm, svg, handlers);
  renderControls(vm, document.getElementById("controls")!, handlers);
  renderToast(vm, document.getElementById("toast")!);
}

function showToast(message: string): void {
  if (!vm) return;
  vm = withToast(vm, message);
  rerender();
  window.clearTimeout(toastTimer);
  toastTimer = window.setTimeout(() => {
    if (vm) {
      vm = withToast(vm, "");
      vm = { ...vm, toast: null };
      rerender();
    }
  }, 2500);
}

async function guarded<T>(action: () => Promise<T>): Promise<T | null> {
  try {
    return await action();
  } catch (error) {
    if (error instanceof ApiError) {
      showToast(`${error.code}: ${error.message}`);
      return null;
    }
    showToast("connection problem; try again");
    return null;
  }
}

const handlers = {
  onNodeClick(node: number): void {
    if (!vm || !canClick(vm, node)) return;
    void guarded(() => api.click(vm!.sessionId, node)).then((result) => {
      if (result && vm) {
        vm = applyClick(vm, result);
        rerender();
      }
    });
  },
  onStepTo(node: number): void {
    if (!vm) return;
    vm = draftToward(vm, node);
    rerender();
  },
  onBack(): void {
    if (!vm) return;
    vm = draftBack(vm);
    rerender();
  },
  onCommit(): void {
    if (!vm || !draftComplete(vm)) return;
    const path = [...vm.pathDraft];
    void guarded(() => api.move(vm!.sessionId, path)).then(async (result) => {
      if (!result || !vm) return;
      vm = applyMove(vm, result);
      if (vm.done) {
        const summary = await guarded(() => api.finish(vm!.sessionId));
        window.localStorage.removeItem(STORAGE_KEY);
        const total = summary?.total_score ?? vm.totalScore;
        const bonus = summary?.bonus_dollars ?? bonusDollars(total);
        renderSummary(total, bonus, document.getElementById("app")!);
      } else {
        rerender();
      }
    });
  },
};

function onKey(event: KeyboardEvent): void {
  if (!vm || vm.done) return;
  if (event.key === "ArrowLeft" || event.key === "ArrowUp" || event.key === "ArrowRight") {
    vm = draftByArrow(vm, event.key);
    event.preventDefault();
    rerender();
  } else if (event.key === "Backspace") {
    vm = draftBack(vm);
    event.preventDefault();
    rerender();
  } else if (event.key === "Enter" && draftComplete(vm)) {
    event.preventDefault();
    handlers.onCommit();
  }
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const stored = window.localStorage.getItem(STORAGE_KEY);
  if (stored) {
    try {
      const state = await api.state(stored);
      if (!state.finished) {
        vm = fromServerState(state);
        rerender();
        return;
      }
    } catch {
      window.localStorage.removeItem(STORAGE_KEY);
    }
  }
  const options: { condition?: string; participant_id?: string } = {};
  const condition = params.get("condition");
  const participant = params.get("participant");
  if (condition) options.condition = condition;
  if (participant) options.participant_id = participant;
  const start = await api.createSession(options);
  window.localStorage.setItem(STORAGE_KEY, start.session_id);
  vm = fromSessionStart(start);
  rerender();
}

window.addEventListener("keydown", onKey);
void boot();
