// Pure DOM rendering: the view is a function of (session context, replica
// state, transient UI hints). No geometry is computed locally beyond scaling
// the synchronized ChartLayout into CSS percentages, and re-rendering from a
// re-applied snapshot reproduces the identical DOM.

import type {
  CubeData,
  LayoutData,
  PoseData,
  ScreenData,
  SessionStateData,
} from "./protocol.js";
import { hologramPose, quatRotate, type Quat, type Vec3 } from "./pose.js";
import { isSelected } from "./state.js";

export interface SessionContext {
  cube: CubeData;
  layout: LayoutData;
  screen: ScreenData;
}

const fmt = (x: number): string => {
  const rounded = Math.round(x * 1000) / 1000;
  return String(rounded);
};

export function renderEmulator(
  root: HTMLElement,
  ctx: SessionContext,
  state: SessionStateData,
): void {
  renderSelectionGrid(root, ctx, state);
  renderAxisChips(root, ctx);
  renderExploration(root, ctx, state);
  renderHologram(root, ctx, state);
}

// --- selection grid (tap targets at the bar bases) ---------------------------------

function area(el: HTMLElement, selector: string): HTMLElement {
  const node = el.querySelector<HTMLElement>(selector);
  if (!node) throw new Error(`missing ${selector} in emulator DOM`);
  return node;
}

export function renderSelectionGrid(
  root: HTMLElement,
  ctx: SessionContext,
  state: SessionStateData,
): void {
  const grid = area(root, "#selection-grid");
  const [ax, ay, aw, ah] = ctx.screen.selection_area;
  grid.dataset.areaX = String(ax);
  grid.dataset.areaY = String(ay);
  grid.dataset.areaW = String(aw);
  grid.dataset.areaH = String(ah);
  grid.textContent = "";
  const nLoc = ctx.cube.locations.length;
  const nYear = ctx.cube.years.length;
  for (let i = 0; i < nLoc; i++) {
    for (let j = 0; j < nYear; j++) {
      const [x0, y0, x1, y1] = ctx.layout.rects[i][j];
      const cell = document.createElement("div");
      cell.className = "cell" + (isSelected(state, i, j) ? " selected" : "");
      cell.dataset.location = String(i);
      cell.dataset.year = String(j);
      cell.style.left = fmt(x0 * 100) + "%";
      cell.style.top = fmt(y0 * 100) + "%";
      cell.style.width = fmt((x1 - x0) * 100) + "%";
      cell.style.height = fmt((y1 - y0) * 100) + "%";
      const base = document.createElement("span");
      base.className = "mark-base";
      base.style.opacity = fmt(0.25 + 0.55 * ctx.layout.heights[i][j]);
      base.title = `${ctx.cube.locations[i]} / ${ctx.cube.years[j]}: ${ctx.cube.values[i][j]}`;
      cell.appendChild(base);
      grid.appendChild(cell);
    }
  }
}

export function renderAxisChips(root: HTMLElement, ctx: SessionContext): void {
  const years = area(root, "#year-axis");
  const locations = area(root, "#location-axis");
  years.textContent = "";
  locations.textContent = "";
  ctx.cube.years.forEach((label, j) => {
    years.appendChild(axisChip("year", j, label));
  });
  ctx.cube.locations.forEach((label, i) => {
    locations.appendChild(axisChip("location", i, label));
  });
}

function axisChip(axis: "location" | "year", index: number, label: string): HTMLElement {
  const chip = document.createElement("div");
  chip.className = "axis-chip";
  chip.dataset.axis = axis;
  chip.dataset.index = String(index);
  const select = document.createElement("button");
  select.className = "axis-select";
  select.textContent = label;
  select.title = `select the ${label} slice`;
  const project = document.createElement("button");
  project.className = "axis-project";
  project.textContent = "⤱"; // drag-onto-screen arrow
  project.title = `project the ${label} slice onto the display`;
  chip.append(select, project);
  return chip;
}

// --- exploration panel ---------------------------------------------------------------

export function renderExploration(
  root: HTMLElement,
  ctx: SessionContext,
  state: SessionStateData,
): void {
  renderProjection(root, ctx, state);
  renderSummary(root, state);
}

function renderProjection(root: HTMLElement, ctx: SessionContext, state: SessionStateData): void {
  const panel = area(root, "#projection-panel");
  panel.textContent = "";
  const proj = state.projection;
  if (proj === null) {
    panel.dataset.active = "false";
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "no projection — use ⤱ on an axis label";
    panel.appendChild(hint);
    return;
  }
  panel.dataset.active = "true";
  panel.dataset.axis = proj.axis;
  panel.dataset.index = String(proj.index);

  const title = document.createElement("h3");
  const fixedLabel =
    proj.axis === "location" ? ctx.cube.locations[proj.index] : ctx.cube.years[proj.index];
  title.textContent = `${fixedLabel} — ${ctx.cube.measure}${ctx.cube.unit ? ` (${ctx.cube.unit})` : ""}`;
  panel.appendChild(title);

  // Bars share the hologram's full-cube scale via value_range: height is
  // value / cube max from a zero baseline, exactly like the 3D layout.
  const hi = proj.range[1];
  const chart = document.createElement("div");
  chart.className = "projection-chart";
  proj.values.forEach((value, k) => {
    const bar = document.createElement("div");
    bar.className = "bar";
    bar.dataset.label = proj.labels[k];
    bar.dataset.value = String(value);
    const h = hi > 0 ? Math.max(0, value) / hi : 0;
    bar.style.height = fmt(h * 100) + "%";
    bar.title = `${proj.labels[k]}: ${value}`;
    const tag = document.createElement("span");
    tag.className = "bar-label";
    tag.textContent = proj.labels[k];
    bar.appendChild(tag);
    chart.appendChild(bar);
  });
  panel.appendChild(chart);
}

function renderSummary(root: HTMLElement, state: SessionStateData): void {
  const card = area(root, "#summary-card");
  card.textContent = "";
  const stats = state.summary;
  if (stats === null) {
    card.dataset.active = "false";
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "no summary yet";
    card.appendChild(hint);
    return;
  }
  card.dataset.active = "true";
  const rows: [string, string][] =
    stats.count === 0
      ? [["selected", "0"]]
      : [
          ["selected", String(stats.count)],
          ["min", fmt(stats.min as number)],
          ["max", fmt(stats.max as number)],
          ["mean", fmt(stats.mean as number)],
          ["sum", fmt(stats.sum)],
        ];
  for (const [k, v] of rows) {
    const row = document.createElement("div");
    row.className = "stat";
    row.dataset.stat = k;
    row.dataset.value = v;
    row.textContent = `${k}: ${v}`;
    card.appendChild(row);
  }
  if (stats.count === 0) {
    const hint = document.createElement("p");
    hint.className = "hint";
    hint.textContent = "empty selection";
    card.appendChild(hint);
  }
}

// --- hologram view (2.5D bars riding the proxy pose) -------------------------------------

const SVG_NS = "http://www.w3.org/2000/svg";
const ISO_X = Math.cos(Math.PI / 6);
const ISO_Y = Math.sin(Math.PI / 6);
const HOLOGRAM_SCALE = 1400; // px per meter in the hologram viewport
const CHART_WIDTH_M = 0.08; // hologram footprint (years axis)
const CHART_DEPTH_M = 0.06; // locations axis
const CHART_HEIGHT_M = 0.05; // tallest bar

function isoProject(p: Vec3, originX: number, originY: number): [number, number] {
  const sx = (p[0] - p[2]) * ISO_X;
  const sy = (p[0] + p[2]) * ISO_Y - p[1];
  return [originX + sx * HOLOGRAM_SCALE, originY + sy * HOLOGRAM_SCALE];
}

export function renderHologram(
  root: HTMLElement,
  ctx: SessionContext,
  state: SessionStateData,
): void {
  const svg = root.querySelector<SVGSVGElement>("#hologram-view");
  if (!svg) throw new Error("missing #hologram-view in emulator DOM");
  svg.textContent = "";
  const viewBox = (svg.getAttribute("viewBox") ?? "0 0 480 300").split(/\s+/).map(Number);
  const originX = (viewBox[2] || 480) / 2;
  const originY = ((viewBox[3] || 300) / 2) * 1.35;

  const pose = hologramPose(state.pose);
  const q = pose.orientation as Quat;
  const base = pose.position as Vec3;
  const nLoc = ctx.cube.locations.length;
  const nYear = ctx.cube.years.length;

  const toWorld = (local: Vec3): Vec3 => {
    const r = quatRotate(q, local);
    return [base[0] + r[0], base[1] + r[1], base[2] + r[2]];
  };

  interface BarGeom {
    i: number;
    j: number;
    depth: number;
    foot: Vec3;
    height: number;
  }
  const bars: BarGeom[] = [];
  for (let i = 0; i < nLoc; i++) {
    for (let j = 0; j < nYear; j++) {
      const lx = ((j + 0.5) / nYear - 0.5) * CHART_WIDTH_M;
      const lz = ((i + 0.5) / nLoc - 0.5) * CHART_DEPTH_M;
      const foot = toWorld([lx, 0, lz]);
      bars.push({
        i,
        j,
        depth: foot[0] + foot[2],
        foot,
        height: ctx.layout.heights[i][j] * CHART_HEIGHT_M,
      });
    }
  }
  bars.sort((a, b) => a.depth - b.depth); // painter's order, far bars first

  const barWidth = (CHART_WIDTH_M / nYear) * HOLOGRAM_SCALE * ISO_X * 0.7;
  for (const bar of bars) {
    const up = quatRotate(q, [0, bar.height, 0]);
    const top: Vec3 = [bar.foot[0] + up[0], bar.foot[1] + up[1], bar.foot[2] + up[2]];
    const [x0, y0] = isoProject(bar.foot, originX, originY);
    const [x1, y1] = isoProject(top, originX, originY);
    const poly = document.createElementNS(SVG_NS, "polygon");
    poly.setAttribute(
      "points",
      [
        `${fmt(x0 - barWidth / 2)},${fmt(y0)}`,
        `${fmt(x0 + barWidth / 2)},${fmt(y0)}`,
        `${fmt(x1 + barWidth / 2)},${fmt(y1)}`,
        `${fmt(x1 - barWidth / 2)},${fmt(y1)}`,
      ].join(" "),
    );
    poly.setAttribute("class", "holo-bar" + (isSelected(state, bar.i, bar.j) ? " tinted" : ""));
    poly.setAttribute("data-location", String(bar.i));
    poly.setAttribute("data-year", String(bar.j));
    poly.setAttribute("data-px", fmt(x0));
    poly.setAttribute("data-py", fmt(y0));
    poly.setAttribute("data-bar-height", fmt(y0 - y1));
    svg.appendChild(poly);
  }
  svg.setAttribute("data-pose-x", fmt(state.pose.position[0]));
  svg.setAttribute("data-pose-y", fmt(state.pose.position[1]));
  svg.setAttribute("data-pose-z", fmt(state.pose.position[2]));
}

// --- haptic pulse ----------------------------------------------------------------------

export function renderHapticPulse(
  root: HTMLElement,
  amplitude: number,
  durationMs: number,
  clock: { setTimeout(fn: () => void, ms: number): unknown } = globalThis,
): void {
  const indicator = area(root, "#haptic-indicator");
  indicator.style.opacity = String(amplitude);
  indicator.classList.add("pulsing");
  indicator.dataset.amplitude = String(amplitude);
  indicator.dataset.durationMs = String(durationMs);
  const pulseCount = Number(indicator.dataset.pulseCount ?? "0") + 1;
  indicator.dataset.pulseCount = String(pulseCount);
  clock.setTimeout(() => {
    // A newer pulse restarts the clock; only the latest one clears it.
    if (indicator.dataset.pulseCount === String(pulseCount)) {
      indicator.classList.remove("pulsing");
      indicator.style.opacity = "0";
    }
  }, durationMs);
  if (typeof navigator !== "undefined" && "vibrate" in navigator) {
    try {
      (navigator as Navigator & { vibrate(ms: number): boolean }).vibrate(durationMs);
    } catch {
      // vibration is best-effort; the visual pulse is the contract
    }
  }
}

export function emulatorSkeleton(): string {
  return `
  <div id="status-bar">
    <span id="conn-status" data-state="disconnected">disconnected</span>
    <span id="digest" title="replica state digest"></span>
  </div>
  <div id="error-banner" hidden></div>
  <div id="stage">
    <div id="phone">
      <div id="screen">
        <div id="selection-wrap">
          <div id="selection-grid"></div>
          <div id="haptic-indicator"></div>
        </div>
        <div id="exploration-area">
          <div id="projection-panel"></div>
          <div id="summary-card"></div>
          <div id="exploration-actions">
            <button id="summarize-btn">summarize selection</button>
            <button id="clear-projection-btn">clear projection</button>
          </div>
        </div>
      </div>
      <div id="location-axis" class="axis-strip"></div>
      <div id="year-axis" class="axis-strip"></div>
    </div>
    <div id="hologram-pane">
      <svg id="hologram-view" viewBox="0 0 480 300"></svg>
      <div id="pose-controls">
        <label>x <input type="range" id="pose-x" min="-0.2" max="0.2" step="0.005" value="0"></label>
        <label>y <input type="range" id="pose-y" min="-0.2" max="0.2" step="0.005" value="0"></label>
        <label>z <input type="range" id="pose-z" min="-0.2" max="0.2" step="0.005" value="0"></label>
        <label>yaw <input type="range" id="pose-yaw" min="-180" max="180" step="1" value="0"></label>
      </div>
    </div>
  </div>`;
}
