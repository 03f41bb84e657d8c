/** Browser entry point: wires the client, reducer, and renderers together. */

import { SessionClient } from "./client.js";
import { renderApp } from "./render.js";
import {
  applyAll,
  emptyView,
  volunteerRowProblem,
  type UiSessionView,
} from "./state.js";
import type { SessionMessage } from "./protocol.js";

const DEFAULT_ENGINE = "http://127.0.0.1:8737";

function engineUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("engine") ?? DEFAULT_ENGINE;
}

let view: UiSessionView = emptyView();
const client = new SessionClient(engineUrl());
const root = document.getElementById("app")!;

function fold(messages: SessionMessage[]): void {
  view = applyAll(view, messages);
  root.innerHTML = renderApp(view);
  wire();
}

async function guarded(action: () => Promise<SessionMessage[]>): Promise<void> {
  try {
    fold(await action());
  } catch (err) {
    // network failure: keep state, show a retry banner, no optimistic update
    view = { ...view, error: `engine unreachable: ${String(err)}` };
    root.innerHTML = renderApp(view);
    wire();
  }
}

function confidenceValue(id: string): number {
  const slider = document.getElementById(id) as HTMLInputElement | null;
  return slider ? Number(slider.value) : 1.0;
}

function wire(): void {
  const attribute = view.question?.attribute ?? null;
  document.querySelectorAll<HTMLButtonElement>("button.answer").forEach((btn) => {
    btn.onclick = () => {
      if (attribute) {
        void guarded(() =>
          client.answer(attribute, btn.dataset.value!, confidenceValue("confidence")),
        );
      }
    };
  });
  const unknown = document.getElementById("answer-unknown");
  if (unknown && attribute) {
    unknown.onclick = () => void guarded(() => client.answer(attribute, "unknown"));
  }
  const irrelevant = document.getElementById("answer-irrelevant");
  if (irrelevant && attribute) {
    irrelevant.onclick = () =>
      void guarded(() => client.answer(attribute, "irrelevant"));
  }
  const volSubmit = document.getElementById("vol-submit");
  if (volSubmit) {
    volSubmit.onclick = () => {
      const attr = (document.getElementById("vol-attribute") as HTMLInputElement).value.trim();
      const value = (document.getElementById("vol-value") as HTMLInputElement).value.trim();
      const problem = volunteerRowProblem(attr, value);
      if (problem) {
        view = { ...view, error: problem };
        root.innerHTML = renderApp(view);
        wire();
        return;
      }
      void guarded(() =>
        client.volunteer([
          { attribute: attr, value, confidence: confidenceValue("vol-confidence") },
        ]),
      );
    };
  }
  const volSkip = document.getElementById("vol-skip");
  if (volSkip) {
    volSkip.onclick = () => void guarded(() => client.volunteer([]));
  }
}

void guarded(() => client.create());
