/**
 * Maze layout: the start position sits at the bottom center and branches
 * fan upward. Leaves are spread evenly left-to-right in depth-first order;
 * internal nodes sit at the mean of their children. Coordinates are in
 * [0, 1] x [0, 1] with y growing downward (SVG convention).
 */

import type { Tree } from "./model.js";

export interface Point {
  x: number;
  y: number;
}

export function layoutTree(tree: Tree): Map<number, Point> {
  const maxDepth = Math.max(...tree.nodes.map((n) => tree.depth.get(n) ?? 0), 1);
  const x = new Map<number, number>();
  let leafIndex = 0;

  const place = (node: number): number => {
    const kids = tree.children.get(node) ?? [];
    if (kids.length === 0) {
      const pos = (leafIndex + 0.5) / tree.leaves.length;
      leafIndex += 1;
      x.set(node, pos);
      return pos;
    }
    const centers = kids.map(place);
    const pos = centers.reduce((a, b) => a + b, 0) / centers.length;
    x.set(node, pos);
    return pos;
  };
  place(tree.root);

  const positions = new Map<number, Point>();
  for (const node of tree.nodes) {
    const depth = tree.depth.get(node) ?? 0;
    positions.set(node, {
      x: x.get(node) ?? 0.5,
      y: 0.92 - 0.84 * (depth / maxDepth),
    });
  }
  return positions;
}
