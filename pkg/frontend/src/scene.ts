/**
 * A renderer-agnostic scene: typed nodes in domain coordinates (time on x,
 * code line on y).  Tests assert on the scene; the DOM layer maps it to SVG.
 */

export type NodeKind = "marker" | "overlay" | "chat-bar" | "envelope" | "projection" | "placeholder";

export interface SceneNode {
  id: string;
  kind: NodeKind;
  classes: string[];
  t: number;
  line: number;
  tEnd?: number;
  lineEnd?: number;
  height?: number;
  color?: string;
  data?: unknown;
}

export class Scene {
  private nodes = new Map<string, SceneNode>();
  private order: string[] = [];

  add(node: SceneNode): void {
    if (!this.nodes.has(node.id)) {
      this.order.push(node.id);
    }
    this.nodes.set(node.id, node);
  }

  clear(): void {
    this.nodes.clear();
    this.order = [];
  }

  get(id: string): SceneNode | undefined {
    return this.nodes.get(id);
  }

  all(): SceneNode[] {
    return this.order.map((id) => this.nodes.get(id)!).filter(Boolean);
  }

  byKind(kind: NodeKind): SceneNode[] {
    return this.all().filter((n) => n.kind === kind);
  }

  withClass(cls: string): SceneNode[] {
    return this.all().filter((n) => n.classes.includes(cls));
  }

  count(kind: NodeKind): number {
    return this.byKind(kind).length;
  }

  get size(): number {
    return this.nodes.size;
  }
}
