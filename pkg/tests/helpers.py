""" Small hand-built objects and datasets shared by the test cases. """
from semgrasp.dataset import (
    DEFAULT_VOCABULARIES,
    Context,
    Dataset,
    GeneratorConfig,
    GraspLabel,
    LabeledGrasp,
    Part,
    PartLabeledObject,
    generate_synthetic,
)

IDENTITY = (1.0, 0.0, 0.0, 0.0)

S, N, NS = GraspLabel.SUITABLE, GraspLabel.NEUTRAL, GraspLabel.NOT_SUITABLE


def make_object(object_id="obj", object_class="cup", parts=(("wrap_grasp", "ceramic"), ("contain", "ceramic"))):
    """ An object whose part `i` is a cluster of 3 points around `(i, 0, 0)`. """
    points, labeled = [], []
    for index, (affordance, material) in enumerate(parts):
        start = len(points)
        points.extend([(float(index), 0.0, 0.0), (float(index), 0.1, 0.0), (float(index), 0.0, 0.1)])
        labeled.append(Part(affordance, material, range(start, start + 3)))
    return PartLabeledObject(object_id, object_class, points, labeled)


def grasp_on(obj, part_index, label=S):
    """ A grasp centered slightly off the first point of a part. """
    x, y, z = obj.points[obj.parts[part_index].point_indices[0]]
    return LabeledGrasp((x + 0.01, y, z), IDENTITY, label, part=part_index)


def make_dataset(entries, vocabularies=DEFAULT_VOCABULARIES):
    """ Dataset from `(context_id, task, state, object, [(part_index, label), ...])` entries. """
    objects, contexts, grasps = [], [], {}
    for context_id, task, state, obj, labeled_parts in entries:
        if obj not in objects:
            objects.append(obj)
        contexts.append(Context(context_id, task, state, obj))
        grasps[context_id] = [grasp_on(obj, _part, _label) for _part, _label in labeled_parts]
    return Dataset(vocabularies, objects, contexts, grasps, {"seed": 0})


def small_synthetic(seed=0, **changes):
    """ A quick synthetic dataset: 5 classes x 2 instances, 2 tasks, 6 grasps per context. """
    config = GeneratorConfig(objects_per_class=2, tasks=("pour", "handover"), grasps_per_context=6, points_per_part=12)
    return generate_synthetic(config._replace(**changes), seed=seed)
