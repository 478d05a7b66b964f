import { describe, expect, it } from "vitest";

import { dropPosition, toEditOp } from "../src/actions.js";

describe("gesture to edit-op payload mapping", () => {
  it("text commit on the name becomes modify_step", () => {
    expect(toEditOp({ kind: "rename", uid: "s3", name: "Outline" })).toEqual({
      kind: "modify_step",
      uid: "s3",
      new_name: "Outline",
      new_description: null,
    });
  });

  it("text commit on the description becomes modify_step", () => {
    expect(
      toEditOp({ kind: "edit-description", uid: "s3", description: "Collect notes" }),
    ).toEqual({
      kind: "modify_step",
      uid: "s3",
      new_name: null,
      new_description: "Collect notes",
    });
  });

  it("plus button becomes add_step after the clicked step", () => {
    expect(toEditOp({ kind: "add-after", after: "s2" })).toEqual({
      kind: "add_step",
      after: "s2",
      name: "New step",
      description: "",
    });
  });

  it("toolbar plus becomes add_step at the front", () => {
    expect(toEditOp({ kind: "add-after", after: null, name: "Intro", description: "d" })).toEqual({
      kind: "add_step",
      after: null,
      name: "Intro",
      description: "d",
    });
  });

  it("minus button becomes remove_step without cascade by default", () => {
    expect(toEditOp({ kind: "delete", uid: "s4" })).toEqual({
      kind: "remove_step",
      uid: "s4",
      cascade: false,
    });
  });

  it("drag among siblings becomes reorder", () => {
    expect(toEditOp({ kind: "drag-reorder", uid: "s2", position: 0 })).toEqual({
      kind: "reorder",
      uid: "s2",
      new_position: 0,
    });
  });

  it("jump handle drop becomes add_jump from source to target", () => {
    expect(
      toEditOp({ kind: "jump-connect", from: "s2", to: "s1", condition: "lack of materials" }),
    ).toEqual({
      kind: "add_jump",
      uid: "s2",
      condition: "lack of materials",
      target_uid: "s1",
    });
  });

  it("jump delete becomes remove_jump with its index", () => {
    expect(toEditOp({ kind: "jump-delete", uid: "s2", index: 1 })).toEqual({
      kind: "remove_jump",
      uid: "s2",
      index: 1,
    });
  });
});

describe("dropPosition", () => {
  const siblings = ["a", "b", "c"];

  it("dragging step 2 above step 1 yields position 0", () => {
    expect(dropPosition(siblings, "b", 0)).toBe(0);
  });

  it("dropping below the original slot accounts for the removal", () => {
    expect(dropPosition(siblings, "a", 2)).toBe(1);
    expect(dropPosition(siblings, "a", 3)).toBe(2);
  });

  it("dropping onto the own slot is a no-op position", () => {
    expect(dropPosition(siblings, "b", 1)).toBe(1);
  });

  it("clamps to the valid range", () => {
    expect(dropPosition(siblings, "c", 99)).toBe(2);
    expect(dropPosition(siblings, "c", -5)).toBe(0);
  });
});
