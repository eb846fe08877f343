"""Prompt composition for the wearable display.

Turns tracker transitions into an ordered list of guidance payloads:
warnings for anything the tracker flagged, a completion notice for each
step left behind, the instruction for the step the user should do now, and
arrows pointing at the required objects the spatial memory can locate.
"""

from __future__ import annotations

import numpy as np

from ..memory3d import CameraModel, ObjectMemory, reproject_to_image
from ..task_model import TaskGraph
from .graph_state import ReasoningError


def simplify_instruction(text: str) -> str:
    """Keep only the leading clause; used when the wearer is overloaded."""
    cuts = [i for i in (text.find(","), text.find(";")) if i > 0]
    if not cuts:
        return text
    return text[:min(cuts)].rstrip()


def side_hint(point_w: np.ndarray, cam: CameraModel) -> str:
    u, _, z = reproject_to_image(point_w, cam)
    if z <= 0:
        return "behind"
    return "left" if u < cam.cx else "right"


def _target_dict(tracklet, cam: CameraModel | None) -> dict:
    target = {"object_id": tracklet.object_id, "class": tracklet.object_class,
              "xyz": [float(c) for c in tracklet.position]}
    if cam is not None:
        target["hint"] = side_hint(tracklet.position, cam)
    return target


def instruction_prompt(task: TaskGraph, step_id: str,
                       memory: ObjectMemory | None = None,
                       cam: CameraModel | None = None,
                       simplify: bool = False) -> dict:
    step = task.step(step_id)
    text = simplify_instruction(step.instruction) if simplify else step.instruction
    prompt = {
        "tag": "guidance_prompt",
        "kind": "simplified_instruction" if simplify else "instruction",
        "text": text,
        "step_id": step_id,
    }
    if memory is not None:
        for cls in step.required_objects:
            found = memory.locate_object(cls)
            if found is not None:
                prompt["target"] = _target_dict(found, cam)
                break
    return prompt


def completion_prompt(task: TaskGraph, step_id: str) -> dict:
    step = task.step(step_id)
    return {
        "tag": "guidance_prompt",
        "kind": "completion",
        "text": f"Step {step.index} of {len(task.steps)} complete",
        "step_id": step_id,
    }


def warning_prompt(error: ReasoningError) -> dict:
    return {"tag": "guidance_prompt", "kind": "warning",
            "text": error.detail, "step_id": error.step_id}


def arrow_prompts(task: TaskGraph, step_id: str, memory: ObjectMemory,
                  cam: CameraModel | None = None) -> list[dict]:
    """One arrow per required object the memory can place in the world."""
    prompts = []
    for cls in task.step(step_id).required_objects:
        found = memory.locate_object(cls)
        if found is None:
            continue
        target = _target_dict(found, cam)
        where = f"to your {target['hint']}" if "hint" in target else "nearby"
        prompts.append({"tag": "guidance_prompt", "kind": "arrow",
                        "text": f"The {cls} is {where}", "step_id": step_id,
                        "target": target})
    return prompts


def prompts_for_transition(task: TaskGraph, prev_step_id: str,
                           advanced: tuple[str, ...],
                           errors: tuple[ReasoningError, ...],
                           memory: ObjectMemory | None = None,
                           cam: CameraModel | None = None,
                           simplify: bool = False) -> list[dict]:
    """Everything the display should say after one tracker transition.

    Warnings come first. Each advance contributes the completion of the
    step being left and the instruction for the one being entered; object
    arrows are only attached for the step that ends up current.
    """
    prompts = [warning_prompt(e) for e in errors]
    chain = [prev_step_id, *advanced]
    for i, entered in enumerate(advanced):
        prompts.append(completion_prompt(task, chain[i]))
        is_last = i == len(advanced) - 1
        prompts.append(instruction_prompt(
            task, entered, memory if is_last else None, cam, simplify))
        if is_last and memory is not None:
            prompts.extend(arrow_prompts(task, entered, memory, cam))
    return prompts
