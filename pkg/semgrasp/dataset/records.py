""" Immutable records of the dataset schema.

All records are `namedtuple` subclasses: they validate their own
structural invariants at construction, compare field by field and can be
shared between processes. Checks that need the vocabularies (labels) live
in `validate_dataset()`.
"""
import enum as _enum
import math as _math
from collections import namedtuple

from semgrasp.dataset.vocabulary import Vocabularies
from semgrasp.errors import DatasetError, VocabularyError

__all__ = [
    "GraspLabel",
    "Part",
    "PartLabeledObject",
    "Context",
    "LabeledGrasp",
    "Dataset",
    "validate_dataset",
]

QUATERNION_TOLERANCE = 1e-6


class GraspLabel(_enum.IntEnum):
    """ Suitability of a grasp for a context. The value is the class index
    used by the network (index 0 is the one grasps are ranked by). """
    SUITABLE = 0
    NEUTRAL = 1
    NOT_SUITABLE = 2

    @property
    def display_name(self):
        # type: () -> str
        return _LABEL_NAMES[self]

    @classmethod
    def from_name(cls, name):
        # type: (str) -> GraspLabel
        for label, label_name in _LABEL_NAMES.items():
            if label_name == name:
                return label
        raise VocabularyError("labels", name)


_LABEL_NAMES = {
    GraspLabel.SUITABLE: "Suitable",
    GraspLabel.NEUTRAL: "Neutral",
    GraspLabel.NOT_SUITABLE: "NotSuitable",
}


def _finite_tuple(values, size, what):
    # type: (object, int, str) -> tuple
    try:
        values = tuple(float(_value) for _value in values)
    except (TypeError, ValueError):
        raise DatasetError("%s must be a sequence of %d numbers (got %r)." % (what, size, values))
    if len(values) != size:
        raise DatasetError("%s must have %d components (got %d)." % (what, size, len(values)))
    if not all(_math.isfinite(_value) for _value in values):
        raise DatasetError("%s must be finite (got %r)." % (what, values))
    return values


class Part(namedtuple("Part", ["affordance", "material", "point_indices"])):
    """ A labeled part of an object: its affordance, its material and the
    indices of the object's points that lie on it. """
    __slots__ = ()

    def __new__(cls, affordance, material, point_indices):
        point_indices = tuple(int(_index) for _index in point_indices)
        if not point_indices:
            raise DatasetError("A part must own at least one point (affordance '%s')." % affordance)
        return super(Part, cls).__new__(cls, affordance, material, point_indices)


class PartLabeledObject(namedtuple("PartLabeledObject", ["object_id", "object_class", "points", "parts"])):
    """ An object instance: a point cloud (meters) segmented into labeled parts. """
    __slots__ = ()

    def __new__(cls, object_id, object_class, points, parts):
        points = tuple(_finite_tuple(_point, 3, "Point of object '%s'" % object_id) for _point in points)
        parts = tuple(parts)
        if not parts:
            raise DatasetError("Object '%s' must have at least one part." % object_id)

        owned = set()
        for part in parts:
            if not isinstance(part, Part):
                raise DatasetError("Parts of object '%s' must be 'Part' instances (got %r)." % (object_id, part))
            for index in part.point_indices:
                if not 0 <= index < len(points):
                    raise DatasetError("Object '%s': point index %d out of range (%d points)." % (object_id, index, len(points)))
                if index in owned:
                    raise DatasetError("Object '%s': point %d belongs to more than one part." % (object_id, index))
                owned.add(index)

        return super(PartLabeledObject, cls).__new__(cls, str(object_id), object_class, points, parts)

    @property
    def num_parts(self):
        # type: () -> int
        return len(self.parts)

    def point_owners(self):
        # type: () -> tuple
        """ Part index owning each point (`-1` for points outside every part). """
        owners = [-1] * len(self.points)
        for part_index, part in enumerate(self.parts):
            for index in part.point_indices:
                owners[index] = part_index
        return tuple(owners)


class Context(namedtuple("Context", ["context_id", "task", "state", "object"])):
    """ A grasp context: the task to perform and the object in a given state. """
    __slots__ = ()

    def __new__(cls, context_id, task, state, object):
        if not isinstance(object, PartLabeledObject):
            raise DatasetError("Context '%s' must reference a 'PartLabeledObject' (got %r)." % (context_id, type(object)))
        return super(Context, cls).__new__(cls, str(context_id), task, state, object)

    @property
    def object_class(self):
        # type: () -> str
        return self.object.object_class


class LabeledGrasp(namedtuple("LabeledGrasp", ["position", "orientation", "label", "part"])):
    """ A 6-DOF grasp candidate with its suitability label.

    Attributes:
        position (tuple[float, float, float]): Grasp center, meters.
        orientation (tuple[float, float, float, float]): Unit quaternion (w, x, y, z).
        label (GraspLabel): Ground-truth suitability.
        part (int|None): Part the grasp was sampled on, when known (synthetic data).
    """
    __slots__ = ()

    def __new__(cls, position, orientation, label, part=None):
        position = _finite_tuple(position, 3, "Grasp position")
        orientation = _finite_tuple(orientation, 4, "Grasp orientation")
        norm = _math.sqrt(sum(_value * _value for _value in orientation))
        if abs(norm - 1.0) > QUATERNION_TOLERANCE:
            raise DatasetError("Grasp orientation must be a unit quaternion (got norm %.9g)." % norm)
        if not isinstance(label, GraspLabel):
            try:
                label = GraspLabel(label)
            except ValueError:
                raise DatasetError("Invalid grasp label %r." % (label,))
        if part is not None:
            part = int(part)
        return super(LabeledGrasp, cls).__new__(cls, position, orientation, label, part)


class Dataset(namedtuple("Dataset", ["vocabularies", "objects", "contexts", "grasps", "metadata"])):
    """ A complete dataset: vocabularies, objects, contexts and the labeled
    grasps of every context (`grasps` maps context ids to grasp tuples, in
    context order). """
    __slots__ = ()

    def __new__(cls, vocabularies, objects, contexts, grasps, metadata=None):
        grasps = dict((str(_id), tuple(_grasps)) for _id, _grasps in grasps.items())
        return super(Dataset, cls).__new__(
            cls, vocabularies, tuple(objects), tuple(contexts), grasps, dict(metadata or {}),
        )

    def context(self, context_id):
        # type: (str) -> Context
        for context in self.contexts:
            if context.context_id == context_id:
                return context
        raise KeyError("Unknown context id '%s'" % context_id)

    def context_ids(self):
        # type: () -> list[str]
        return [_context.context_id for _context in self.contexts]

    @property
    def num_grasps(self):
        # type: () -> int
        return sum(len(_grasps) for _grasps in self.grasps.values())

    def subset(self, context_ids):
        """ The contexts with the given ids, paired with their grasps, in
        dataset order. """
        wanted = set(context_ids)
        return [(_context, self.grasps[_context.context_id]) for _context in self.contexts if _context.context_id in wanted]


def validate_dataset(dataset):
    # type: (Dataset) -> Dataset
    """ Check every invariant of a dataset, including label membership.

    Raises:
        DatasetError: On the first violated invariant.
        VocabularyError: On the first label missing from the vocabularies.

    Returns:
        Dataset: The same dataset.
    """
    vocabularies = dataset.vocabularies
    if not isinstance(vocabularies, Vocabularies):
        raise DatasetError("Dataset vocabularies must be a 'Vocabularies' instance.")

    objects = {}
    for obj in dataset.objects:
        if obj.object_id in objects:
            raise DatasetError("Duplicate object id '%s'." % obj.object_id)
        objects[obj.object_id] = obj
        vocabularies.check("object_classes", obj.object_class)
        for part in obj.parts:
            vocabularies.check("affordances", part.affordance)
            vocabularies.check("materials", part.material)

    if not dataset.contexts:
        raise DatasetError("A dataset must contain at least one context.")

    seen = set()
    for context in dataset.contexts:
        if context.context_id in seen:
            raise DatasetError("Duplicate context id '%s'." % context.context_id)
        seen.add(context.context_id)
        vocabularies.check("tasks", context.task)
        vocabularies.check("states", context.state)
        if objects.get(context.object.object_id) != context.object:
            raise DatasetError("Context '%s' references unknown object '%s'." % (context.context_id, context.object.object_id))
        if not dataset.grasps.get(context.context_id):
            raise DatasetError("Context '%s' has no grasps." % context.context_id)
        for grasp in dataset.grasps[context.context_id]:
            if grasp.part is not None and not 0 <= grasp.part < context.object.num_parts:
                raise DatasetError("Grasp of context '%s' references part %d out of range." % (context.context_id, grasp.part))

    dangling = set(dataset.grasps) - seen
    if dangling:
        raise DatasetError("Grasps reference unknown contexts: %s" % ", ".join(sorted(dangling)))

    return dataset
