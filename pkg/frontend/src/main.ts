/** Browser entry: connect to the monitor server and wire the dashboard. */

import { Dashboard } from "./dashboard.js";
import { makeProjection, renderCode, renderScene } from "./dom/render.js";
import { FrameClient, WebSocketTransport } from "./transport.js";

function qs<T extends Element>(selector: string): T {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
}

function start(): void {
  const params = new URLSearchParams(location.search);
  const sessionId = params.get("session") ?? "demo";
  const server = params.get("server")
    ?? `ws://${location.hostname}:8787/stream`;
  const token = params.get("token") ?? undefined;

  const svg = qs<SVGSVGElement>("#timeline");
  const codePane = qs<HTMLElement>("#code");
  const banner = qs<HTMLElement>("#banner");
  const metricsPane = qs<HTMLElement>("#metrics");
  const tooltip = qs<HTMLElement>("#tooltip");

  const sock = new WebSocket(server);
  const client = new FrameClient(new WebSocketTransport(sock), sessionId);
  const dashboard = new Dashboard(client);

  const redraw = () => {
    banner.textContent = dashboard.timeline.banner ?? "";
    banner.style.display = dashboard.timeline.banner ? "block" : "none";
    const model = dashboard.timeline.model;
    if (model) {
      const projection = makeProjection(model, svg.clientWidth || 900,
                                        svg.clientHeight || 420);
      renderScene(svg, dashboard.timeline.scene, projection);
    }
    renderCode(codePane, dashboard.code);
    metricsPane.textContent = dashboard.state.metrics
      ? JSON.stringify(dashboard.state.metrics, null, 2)
      : "(no metrics yet)";
    tooltip.textContent = dashboard.state.hoverText ?? "";
  };

  client.onFrame(() => requestAnimationFrame(redraw));
  sock.addEventListener("open", () => {
    dashboard.connectAsInstructor(token);
    dashboard.requestTimeline();
    dashboard.requestMetrics();
    dashboard.requestSnapshot();
  });

  svg.addEventListener("click", (ev) => {
    const model = dashboard.timeline.model;
    if (!model) return;
    const rect = svg.getBoundingClientRect();
    const projection = makeProjection(model, rect.width, rect.height);
    const t = model.t_min + ((ev.clientX - rect.left - 5) / (rect.width - 10))
      * Math.max(1, model.t_max - model.t_min);
    const line = Math.round(((ev.clientY - rect.top - projection.barLane)
      / (rect.height - projection.barLane)) * Math.max(1, model.max_line) + 0.5);
    dashboard.click(Math.round(t), line);
    redraw();
  });

  setInterval(() => {
    dashboard.requestTimeline();
    dashboard.requestMetrics();
    dashboard.requestSnapshot();
  }, 5000);
}

start();
