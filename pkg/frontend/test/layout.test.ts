import { describe, expect, it } from "vitest";

import { layoutTree } from "../src/layout.js";
import { buildTree } from "../src/model.js";

const TOPOLOGY = {
  root: 0,
  edges: {
    "0": [1, 2, 3],
    "1": [4],
    "2": [5],
    "3": [6],
    "4": [7, 8],
    "5": [9, 10],
    "6": [11, 12],
  },
};

describe("layoutTree", () => {
  const tree = buildTree(TOPOLOGY);
  const positions = layoutTree(tree);

  it("keeps every node inside the unit square", () => {
    for (const { x, y } of positions.values()) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(1);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(1);
    }
  });

  it("places the start at the bottom center", () => {
    const root = positions.get(0)!;
    expect(root.x).toBeCloseTo(0.5, 1);
    for (const node of tree.nodes) {
      if (node !== 0) expect(positions.get(node)!.y).toBeLessThan(root.y);
    }
  });

  it("moves upward with depth", () => {
    for (const node of tree.nodes) {
      const parent = tree.parent.get(node);
      if (parent !== undefined) {
        expect(positions.get(node)!.y).toBeLessThan(positions.get(parent)!.y);
      }
    }
  });

  it("spreads leaves without collisions", () => {
    const xs = tree.leaves.map((l) => positions.get(l)!.x);
    const distinct = new Set(xs.map((x) => x.toFixed(6)));
    expect(distinct.size).toBe(tree.leaves.length);
    expect([...xs].sort((a, b) => a - b)).toEqual(xs);
  });

  it("centers parents over their children", () => {
    const kids = [9, 10].map((n) => positions.get(n)!.x);
    expect(positions.get(5)!.x).toBeCloseTo((kids[0] + kids[1]) / 2, 6);
  });
});
