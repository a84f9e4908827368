/** Browser-only rendering: maps the scene to SVG and the code pane to DOM.
 * All geometry stays in the scene; this file just projects it to pixels. */

import { Scene } from "../scene.js";
import { CodeView } from "../codeView.js";
import { TimelineModel } from "../types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Projection {
  x(t: number): number;
  y(line: number): number;
  width: number;
  height: number;
  barLane: number;
}

export function makeProjection(model: TimelineModel, width: number,
                               height: number): Projection {
  const span = Math.max(1, model.t_max - model.t_min);
  const lines = Math.max(1, model.max_line);
  const barLane = 36;
  const plot = height - barLane;
  return {
    x: (t) => ((t - model.t_min) / span) * (width - 10) + 5,
    y: (line) => barLane + ((line - 0.5) / lines) * plot,
    width,
    height,
    barLane,
  };
}

export function renderScene(svg: SVGSVGElement, scene: Scene,
                            projection: Projection): void {
  while (svg.firstChild) {
    svg.removeChild(svg.firstChild);
  }
  for (const node of scene.all()) {
    let el: SVGElement;
    switch (node.kind) {
      case "envelope": {
        el = document.createElementNS(SVG_NS, "rect");
        el.setAttribute("x", String(projection.x(node.t)));
        el.setAttribute("y", String(projection.y(node.line)));
        el.setAttribute("width", "4");
        el.setAttribute("height",
          String(Math.max(1, projection.y(node.lineEnd ?? node.line) - projection.y(node.line))));
        break;
      }
      case "overlay": {
        el = document.createElementNS(SVG_NS, "rect");
        const x0 = projection.x(node.t);
        const x1 = projection.x(node.tEnd ?? node.t);
        const y0 = projection.y(node.line);
        const y1 = projection.y((node.lineEnd ?? node.line) + 1);
        el.setAttribute("x", String(x0));
        el.setAttribute("y", String(y0));
        el.setAttribute("width", String(Math.max(2, x1 - x0)));
        el.setAttribute("height", String(Math.max(2, y1 - y0)));
        el.setAttribute("opacity", "0.45");
        break;
      }
      case "chat-bar": {
        el = document.createElementNS(SVG_NS, "rect");
        el.setAttribute("x", String(projection.x(node.t)));
        const h = Math.min(projection.barLane - 2, Math.max(2, (node.height ?? 1) / 2));
        el.setAttribute("y", String(projection.barLane - h));
        el.setAttribute("width", "3");
        el.setAttribute("height", String(h));
        break;
      }
      case "projection": {
        el = document.createElementNS(SVG_NS, "rect");
        el.setAttribute("x", "0");
        el.setAttribute("y", String(projection.y(node.line)));
        el.setAttribute("width", "3");
        el.setAttribute("height",
          String(Math.max(2, projection.y((node.lineEnd ?? node.line) + 1) - projection.y(node.line))));
        break;
      }
      case "placeholder": {
        el = document.createElementNS(SVG_NS, "text");
        el.setAttribute("x", String(projection.width / 2));
        el.setAttribute("y", String(projection.height / 2));
        el.setAttribute("text-anchor", "middle");
        el.textContent = String(node.data ?? "");
        break;
      }
      default: { // marker
        el = document.createElementNS(SVG_NS, "circle");
        el.setAttribute("cx", String(projection.x(node.t)));
        el.setAttribute("cy", String(projection.y(node.line)));
        el.setAttribute("r", "2.5");
      }
    }
    if (node.color) {
      el.setAttribute("fill", node.color);
    }
    el.setAttribute("class", node.classes.join(" "));
    el.setAttribute("data-node-id", node.id);
    svg.appendChild(el);
  }
}

export function renderCode(container: HTMLElement, code: CodeView): void {
  container.textContent = "";
  const [first, last] = code.visibleWindow();
  for (let lineNo = first; lineNo <= last && lineNo <= code.lineCount; lineNo++) {
    const row = document.createElement("div");
    row.className = "code-line";
    if (code.highlight
        && code.highlight.lineStart <= lineNo && lineNo <= code.highlight.lineEnd) {
      row.className += ` highlighted highlight-${code.highlight.reason}`;
    }
    const gutter = document.createElement("span");
    gutter.className = "gutter";
    gutter.textContent = String(lineNo).padStart(4, " ");
    const text = document.createElement("span");
    text.textContent = code.lines[lineNo - 1] ?? "";
    row.append(gutter, text);
    container.appendChild(row);
  }
}
