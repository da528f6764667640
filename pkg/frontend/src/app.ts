/** DOM wiring: render one SessionState, route clicks through the client.
 *
 * Rendering is a pure function of the state object; every action computes a
 * new state and re-renders.  Service failures land in the status line with
 * the service's own message.
 */

import { Client, ServiceError, type GenerateRequest } from "./api.js";
import { diffWords, shade } from "./diff.js";
import {
  appendGeneration,
  adoptMask,
  clearOverlay,
  exportSession,
  importSession,
  isForced,
  maskIsEmpty,
  newSession,
  setOverlay,
  toggleToken,
  type SessionState,
} from "./session.js";

export function createStudio(root: HTMLElement, client: Client): void {
  let state: SessionState | null = null;
  let diffPick: number[] = [];

  root.innerHTML = `
    <div class="studio">
      <h1>selection studio</h1>
      <div class="row">
        <input id="source" placeholder="source text" size="60">
        <button id="load">load</button>
        <span id="status" class="status"></span>
      </div>
      <div id="tokens" class="tokens"></div>
      <div id="warning" class="warning"></div>
      <div class="row controls">
        <label>mode <select id="mode">
          <option>greedy</option><option>beam</option><option>sample</option>
        </select></label>
        <label>samples <input id="samples" type="number" value="3" min="1" size="3"></label>
        <label>seed <input id="seed" type="number" value="0" size="6"></label>
        <button id="regen">regenerate</button>
      </div>
      <div class="row">
        <input id="target" placeholder="paste a reference to infer selection" size="50">
        <button id="infer">infer selection</button>
        <button id="adopt" disabled>adopt best mask</button>
        <button id="clear">clear</button>
      </div>
      <div id="history" class="history"></div>
      <div id="diff" class="diff"></div>
      <div class="row">
        <button id="export">export session</button>
        <input id="import" type="file" accept=".json">
      </div>
    </div>`;

  const el = <T extends HTMLElement>(id: string): T => root.querySelector(`#${id}`) as T;
  const status = (msg: string) => { el("status").textContent = msg; };

  const fail = (e: unknown) => {
    status(e instanceof ServiceError ? `service error ${e.status}: ${e.message}` : String(e));
  };

  let lastBest: number[] | null = null;

  function renderTokens(): void {
    const box = el("tokens");
    box.innerHTML = "";
    if (!state) return;
    state.tokens.forEach((tok, i) => {
      const b = document.createElement("button");
      b.className = "token";
      b.textContent = tok;
      const heat = state!.overlay ? state!.overlay[i]! : state!.gamma[i]!;
      b.style.background = shade(heat);
      b.style.color = heat > 0.5 ? "white" : "black";
      if (state!.mask[i]) b.classList.add("selected");
      if (isForced(state!, i)) b.classList.add("forced"); // user override, not the model's call
      b.title = `${state!.overlay ? "q" : "gamma"}=${heat.toFixed(3)}`;
      b.addEventListener("click", () => {
        state = toggleToken(state!, i);
        render();
      });
      box.appendChild(b);
    });
    el("warning").textContent =
      state && maskIsEmpty(state) ? "empty mask: generation will be rejected" : "";
  }

  function renderHistory(): void {
    const box = el("history");
    box.innerHTML = "";
    if (!state) return;
    state.history.forEach((h, idx) => {
      const div = document.createElement("div");
      div.className = "entry" + (diffPick.includes(idx) ? " picked" : "");
      const bits = h.mask.join("");
      const head = document.createElement("div");
      head.className = "entry-head";
      head.textContent = `#${idx + 1}  mask ${bits}  ${h.mode}  seed ${h.seed}`;
      head.addEventListener("click", () => {
        diffPick = diffPick.includes(idx)
          ? diffPick.filter((x) => x !== idx)
          : [...diffPick.slice(-1), idx];
        render();
      });
      div.appendChild(head);
      h.texts.forEach((t, j) => {
        const p = document.createElement("p");
        p.textContent = `(${h.scores[j]?.toFixed(3)}) ${t}`;
        div.appendChild(p);
      });
      box.appendChild(div);
    });
    const diffBox = el("diff");
    diffBox.innerHTML = "";
    if (diffPick.length === 2 && state) {
      const [a, b] = diffPick.map((i) => state!.history[i]!);
      const d = diffWords(a!.texts.join(" "), b!.texts.join(" "));
      diffBox.innerHTML =
        `<span class="removed">&minus; ${d.removed.join(", ") || "(none)"}</span> ` +
        `<span class="added">+ ${d.added.join(", ") || "(none)"}</span>`;
    }
  }

  function render(): void {
    renderTokens();
    renderHistory();
    el<HTMLButtonElement>("adopt").disabled = lastBest === null;
  }

  el("load").addEventListener("click", async () => {
    try {
      const source = el<HTMLInputElement>("source").value;
      const r = await client.encode(source);
      state = newSession(source, r.tokens, r.gamma);
      lastBest = null;
      diffPick = [];
      status("");
      render();
    } catch (e) {
      fail(e);
    }
  });

  el("regen").addEventListener("click", async () => {
    if (!state) return;
    if (maskIsEmpty(state)) {
      status("empty mask: generation will be rejected");
      return;
    }
    const req: GenerateRequest = {
      source: state.source,
      mask: [...state.mask],
      mode: el<HTMLSelectElement>("mode").value as GenerateRequest["mode"],
      samples: Number(el<HTMLInputElement>("samples").value),
      seed: Number(el<HTMLInputElement>("seed").value),
    };
    try {
      const resp = await client.generate(req);
      state = appendGeneration(state, req, resp);
      status("");
      render();
    } catch (e) {
      fail(e);
    }
  });

  el("infer").addEventListener("click", async () => {
    if (!state) return;
    const target = el<HTMLInputElement>("target").value;
    try {
      const r = await client.posterior(state.source, target);
      state = setOverlay(state, target, r.q);
      lastBest = r.best_mask;
      status("");
      render();
    } catch (e) {
      fail(e);
    }
  });

  el("adopt").addEventListener("click", () => {
    if (!state || !lastBest) return;
    state = adoptMask(state, lastBest);
    render();
  });

  el("clear").addEventListener("click", () => {
    if (!state) return;
    state = clearOverlay(state);
    lastBest = null;
    el<HTMLInputElement>("target").value = "";
    render();
  });

  el("export").addEventListener("click", () => {
    if (!state) return;
    const blob = new Blob([exportSession(state)], { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.json";
    a.click();
    URL.revokeObjectURL(a.href);
  });

  el<HTMLInputElement>("import").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      state = importSession(await file.text());
      lastBest = null;
      diffPick = [];
      status("");
      render();
    } catch (e) {
      fail(e);
    }
  });
}
