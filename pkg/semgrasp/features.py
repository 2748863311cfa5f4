""" Semantic feature extraction and the wide/deep encodings of the features.

A grasp in a context is summarised by the symbolic vector

    x = (task, state, grasp affordance, grasp material,
         part_1 affordance, part_1 material, ..., part_N affordance, part_N material)

of dimension `4 + 2N`. The wide path sees it as a sparse binary vector
(one-hot blocks, multi-hot part blocks, optional crossed blocks), the deep
path as vocabulary indices to look up in embedding tables.
"""
import functools as _functools
from collections import namedtuple

import numpy as np

from semgrasp.errors import ModelError
from semgrasp.geometry import assign_grasp_to_part

__all__ = [
    "CROSSES",
    "SemanticFeatureVector",
    "WideEncoding",
    "DeepEncoding",
    "WideLayout",
    "extract",
    "encode_wide",
    "encode_deep",
    "decode_deep",
    "wide_layout",
]

CROSSES = ("task_x_affordance", "state_x_affordance", "task_x_material")
""" Crossed one-hot blocks the wide path can add, in layout order. """

# Vocabulary kinds each crossed block is made of
_CROSS_KINDS = {
    "task_x_affordance": ("tasks", "affordances"),
    "state_x_affordance": ("states", "affordances"),
    "task_x_material": ("tasks", "materials"),
}


class SemanticFeatureVector(namedtuple("SemanticFeatureVector", ["task", "state", "grasp_affordance", "grasp_material", "parts"])):
    """ The symbolic features of a (context, grasp) pair.

    `parts` lists `(affordance, material)` pairs in object order.
    """
    __slots__ = ()

    @property
    def dimension(self):
        # type: () -> int
        return 4 + 2 * len(self.parts)


class WideEncoding(namedtuple("WideEncoding", ["indices", "length"])):
    """ Binary sparse vector: ascending active indices and total length. """
    __slots__ = ()

    def to_dense(self):
        # type: () -> np.ndarray
        dense = np.zeros(self.length, dtype=np.float64)
        dense[list(self.indices)] = 1.0
        return dense


class DeepEncoding(namedtuple("DeepEncoding", ["task", "state", "grasp_affordance", "grasp_material", "parts", "dense"])):
    """ Vocabulary indices of the four context/grasp slots, one
    `(affordance, material)` index pair per part, and an optional dense
    passthrough vector (empty by default). """
    __slots__ = ()


def extract(context, grasp):
    """ Build the semantic feature vector of `grasp` in `context`.

    Task and state come from the context; grasp affordance and material
    from the object part nearest to the grasp center.

    Args:
        context (Context): The grasp context.
        grasp (LabeledGrasp): The grasp candidate.

    Returns:
        SemanticFeatureVector: The features, `4 + 2N` symbols.
    """
    obj = context.object
    part = obj.parts[assign_grasp_to_part(obj, grasp)]
    return SemanticFeatureVector(
        task=context.task,
        state=context.state,
        grasp_affordance=part.affordance,
        grasp_material=part.material,
        parts=tuple((_part.affordance, _part.material) for _part in obj.parts),
    )


class WideLayout:
    """ Block layout of the wide vector.

    Blocks, in order: task | state | grasp_affordance | grasp_material |
    part_affordances (multi-hot) | part_materials (multi-hot) | enabled crosses.

    Examples:
        ```pycon
        >>> WideLayout(DEFAULT_VOCABULARIES).length
        49
        ```
    """
    def __init__(self, vocabularies, crosses=()):
        crosses = tuple(crosses)
        unknown = [_cross for _cross in crosses if _cross not in CROSSES]
        if unknown:
            raise ModelError("Unknown cross features: %s (expected some of %s)." % (", ".join(unknown), ", ".join(CROSSES)))

        self.vocabularies = vocabularies
        self.crosses = tuple(_cross for _cross in CROSSES if _cross in crosses)

        sizes = [
            ("task", vocabularies.size("tasks")),
            ("state", vocabularies.size("states")),
            ("grasp_affordance", vocabularies.size("affordances")),
            ("grasp_material", vocabularies.size("materials")),
            ("part_affordances", vocabularies.size("affordances")),
            ("part_materials", vocabularies.size("materials")),
        ]
        for cross in self.crosses:
            first, second = _CROSS_KINDS[cross]
            sizes.append((cross, vocabularies.size(first) * vocabularies.size(second)))

        self.blocks = {}
        offset = 0
        for name, size in sizes:
            self.blocks[name] = (offset, size)
            offset += size
        self.length = offset

    def offset(self, name):
        # type: (str) -> int
        return self.blocks[name][0]

    def columns(self, feature):
        # type: (str) -> list[int]
        """ Every column carrying information about `feature` (`task` or
        `state`), crossed blocks included. Used to mask a feature out. """
        names = [feature] + [_cross for _cross in self.crosses if _cross.startswith(feature + "_x_")]
        columns = []
        for name in names:
            offset, size = self.blocks[name]
            columns.extend(range(offset, offset + size))
        return columns


@_functools.lru_cache(maxsize=32)
def wide_layout(vocabularies, crosses=()):
    # type: (object, tuple) -> WideLayout
    """ Cached `WideLayout` for a (vocabularies, crosses) pair. """
    return WideLayout(vocabularies, crosses)


def encode_wide(x, vocabularies, crosses=()):
    # type: (SemanticFeatureVector, object, tuple) -> WideEncoding
    """ Sparse binary wide vector of `x`.

    Part blocks are multi-hot: they do not depend on the order of the parts,
    and duplicate labels collapse.

    Raises:
        VocabularyError: If a label is not in the vocabularies.
    """
    layout = wide_layout(vocabularies, tuple(crosses))
    task = vocabularies.index("tasks", x.task)
    state = vocabularies.index("states", x.state)
    affordance = vocabularies.index("affordances", x.grasp_affordance)
    material = vocabularies.index("materials", x.grasp_material)

    active = {
        layout.offset("task") + task,
        layout.offset("state") + state,
        layout.offset("grasp_affordance") + affordance,
        layout.offset("grasp_material") + material,
    }
    for part_affordance, part_material in x.parts:
        active.add(layout.offset("part_affordances") + vocabularies.index("affordances", part_affordance))
        active.add(layout.offset("part_materials") + vocabularies.index("materials", part_material))

    num_affordances = vocabularies.size("affordances")
    if "task_x_affordance" in layout.crosses:
        active.add(layout.offset("task_x_affordance") + task * num_affordances + affordance)
    if "state_x_affordance" in layout.crosses:
        active.add(layout.offset("state_x_affordance") + state * num_affordances + affordance)
    if "task_x_material" in layout.crosses:
        active.add(layout.offset("task_x_material") + task * vocabularies.size("materials") + material)

    return WideEncoding(tuple(sorted(active)), layout.length)


def encode_deep(x, vocabularies, dense=()):
    # type: (SemanticFeatureVector, object, tuple) -> DeepEncoding
    """ Embedding indices of `x`, parts kept in object order.

    Raises:
        VocabularyError: If a label is not in the vocabularies.
    """
    return DeepEncoding(
        task=vocabularies.index("tasks", x.task),
        state=vocabularies.index("states", x.state),
        grasp_affordance=vocabularies.index("affordances", x.grasp_affordance),
        grasp_material=vocabularies.index("materials", x.grasp_material),
        parts=tuple(
            (vocabularies.index("affordances", _affordance), vocabularies.index("materials", _material))
            for _affordance, _material in x.parts
        ),
        dense=tuple(float(_value) for _value in dense),
    )


def decode_deep(encoding, vocabularies):
    # type: (DeepEncoding, object) -> SemanticFeatureVector
    """ Inverse of `encode_deep()` (the dense passthrough is dropped). """
    return SemanticFeatureVector(
        task=vocabularies.label("tasks", encoding.task),
        state=vocabularies.label("states", encoding.state),
        grasp_affordance=vocabularies.label("affordances", encoding.grasp_affordance),
        grasp_material=vocabularies.label("materials", encoding.grasp_material),
        parts=tuple(
            (vocabularies.label("affordances", _affordance), vocabularies.label("materials", _material))
            for _affordance, _material in encoding.parts
        ),
    )
