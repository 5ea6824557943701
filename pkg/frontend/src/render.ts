/**
 * SVG rendering of the maze plus the status banner. Renders only what the
 * view model holds; concealed values are shown as "?" until the server
 * reveals them.
 */

import { layoutTree } from "./layout.js";
import { draftComplete, draftOptions, draftTip, type ViewModel } from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 520;

export interface Handlers {
  onNodeClick: (node: number) => void;
  onStepTo: (node: number) => void;
  onBack: () => void;
  onCommit: () => void;
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

export function renderBanner(vm: ViewModel, banner: HTMLElement): void {
  banner.innerHTML = "";
  const rows: Array<[string, string]> = [
    ["Condition", vm.condition],
    ["Trial", `${Math.min(vm.trialIndex + 1, vm.nTrials)} / ${vm.nTrials}`],
    ["Click cost", String(vm.clickCost)],
    ["Clicks this trial", String(vm.clicks.length)],
    ["Trial cost so far", String(vm.trialCost)],
    ["Total score", String(vm.totalScore)],
  ];
  for (const [label, value] of rows) {
    const cell = document.createElement("div");
    cell.className = "banner-cell";
    cell.innerHTML = `<span class="label">${label}</span><span class="value">${value}</span>`;
    banner.appendChild(cell);
  }
}

export function renderMaze(vm: ViewModel, svg: SVGSVGElement, handlers: Handlers): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  const positions = layoutTree(vm.tree);
  const px = (n: number) => positions.get(n)!.x * WIDTH;
  const py = (n: number) => positions.get(n)!.y * HEIGHT;

  const onPath = new Set(vm.pathDraft);
  for (const node of vm.tree.nodes) {
    for (const child of vm.tree.children.get(node) ?? []) {
      const walked = onPath.has(child) && (node === vm.tree.root || onPath.has(node));
      svg.appendChild(
        el("line", {
          x1: px(node), y1: py(node), x2: px(child), y2: py(child),
          class: walked ? "edge walked" : "edge",
        }),
      );
    }
  }

  const tip = draftTip(vm);
  const options = new Set(draftOptions(vm));
  for (const node of vm.tree.nodes) {
    const group = el("g", { class: "node-group" });
    const isRoot = node === vm.tree.root;
    const revealed = vm.revealed.get(node);
    const classes = ["node"];
    if (isRoot) classes.push("root");
    if (revealed !== undefined) classes.push("revealed");
    if (onPath.has(node)) classes.push("on-path");
    if (options.has(node)) classes.push("step-option");
    const circle = el("circle", {
      cx: px(node), cy: py(node), r: isRoot ? 16 : 22, class: classes.join(" "),
    });
    group.appendChild(circle);
    const label = el("text", {
      x: px(node), y: py(node) + 5, "text-anchor": "middle", class: "node-label",
    });
    label.textContent = isRoot ? "S" : revealed !== undefined ? String(revealed) : "?";
    group.appendChild(label);
    if (!isRoot) {
      group.addEventListener("click", () => {
        if (options.has(node)) handlers.onStepTo(node);
        else if (vm.revealed.has(node)) return; // visual no-op on revealed nodes
        else handlers.onNodeClick(node);
      });
    }
    svg.appendChild(group);
  }

  // spider marker at the draft tip
  svg.appendChild(
    el("circle", { cx: px(tip), cy: py(tip), r: 7, class: "spider" }),
  );
}

export function renderControls(vm: ViewModel, controls: HTMLElement, handlers: Handlers): void {
  controls.innerHTML = "";
  const back = document.createElement("button");
  back.textContent = "Step back";
  back.disabled = vm.pathDraft.length === 0;
  back.addEventListener("click", handlers.onBack);
  const commit = document.createElement("button");
  commit.textContent = "Move along path";
  commit.disabled = !draftComplete(vm);
  commit.addEventListener("click", handlers.onCommit);
  const hint = document.createElement("span");
  hint.className = "hint";
  hint.textContent =
    "Click grey circles to reveal values. Build your route with the arrow keys " +
    "(or by clicking highlighted circles), then press Enter or “Move along path”.";
  controls.append(back, commit, hint);
}

export function renderToast(vm: ViewModel, toast: HTMLElement): void {
  toast.textContent = vm.toast ?? "";
  toast.className = vm.toast ? "toast visible" : "toast";
}

export function renderSummary(
  totalScore: number,
  bonus: number,
  container: HTMLElement,
): void {
  container.innerHTML = `
    <div class="summary">
      <h2>All trials complete</h2>
      <p>Final score: <strong>${totalScore}</strong></p>
      <p>Bonus: <strong>$${bonus.toFixed(2)}</strong></p>
      <p>Thank you for participating.</p>
    </div>`;
}
