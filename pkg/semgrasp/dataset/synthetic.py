""" Rule-driven synthetic dataset generator.

Objects are composed primitives (cylinders, rings, boxes) whose parts carry
an affordance and a material. Grasps are sampled on the parts and labeled
by an ordered rule table, which is therefore the ground truth of every
generated label.

Rule patterns:
    - `*` matches anything, `a|b` matches `a` or `b`;
    - in state patterns `a+b` matches a state whose components include
      both `a` and `b` (a compound state such as `filled_hot` has the
      components `filled` and `hot`; a plain state is its own component);
    - object patterns test the affordances of all the object's parts:
      `a|b` requires at least one part with `a` or `b`, `!a|b` requires none.
"""
import logging as _logging
from collections import namedtuple

import numpy as np

from semgrasp import __version__
from semgrasp.dataset.records import (
    Context,
    Dataset,
    GraspLabel,
    LabeledGrasp,
    Part,
    PartLabeledObject,
)
from semgrasp.dataset.serialization import quantize
from semgrasp.dataset.vocabulary import DEFAULT_VOCABULARIES
from semgrasp.errors import DatasetError
from semgrasp.geometry import linear_scan_nearest

__all__ = [
    "Rule",
    "RuleTable",
    "GeneratorConfig",
    "DEFAULT_RULES",
    "AFFORDANCE_RULES",
    "joint_task_state_rules",
    "generate_synthetic",
    "oracle_label",
    "is_feasible",
]

logger = _logging.getLogger(__name__)

S, N, NS = GraspLabel.SUITABLE, GraspLabel.NEUTRAL, GraspLabel.NOT_SUITABLE


class Rule(namedtuple("Rule", ["task", "state", "grasp_affordance", "material", "label", "object_pattern"])):
    """ One row of a rule table: patterns over the context and the grasp, and the label they imply. """
    __slots__ = ()

    def __new__(cls, task, state, grasp_affordance, material, label, object_pattern="*"):
        return super(Rule, cls).__new__(cls, task, state, grasp_affordance, material, GraspLabel(label), object_pattern)


def _alternatives(pattern):
    # type: (str) -> list[str]
    return [_term.strip() for _term in pattern.split("|")]


def _match(pattern, value):
    # type: (str, str) -> bool
    return pattern == "*" or value in _alternatives(pattern)


def _match_state(pattern, state, compound_states):
    # type: (str, str, dict) -> bool
    if pattern == "*":
        return True
    components = set(compound_states.get(state, (state,)))
    components.add(state)
    for alternative in _alternatives(pattern):
        if all(_term in components for _term in alternative.split("+")):
            return True
    return False


def _match_object(pattern, affordances):
    # type: (str, frozenset) -> bool
    if pattern == "*":
        return True
    negated = pattern.startswith("!")
    present = any(_term in affordances for _term in _alternatives(pattern.lstrip("!")))
    return not present if negated else present


class RuleTable(namedtuple("RuleTable", ["rules", "default_label", "compound_states"])):
    """ Ordered rules; the first matching rule gives the label, else `default_label`. """
    __slots__ = ()

    def __new__(cls, rules, default_label=GraspLabel.NEUTRAL, compound_states=()):
        rules = tuple(rules)
        if not rules:
            raise DatasetError("A rule table needs at least one rule.")
        return super(RuleTable, cls).__new__(cls, rules, GraspLabel(default_label), tuple(compound_states))

    def label(self, task, state, grasp_affordance, grasp_material, object_affordances):
        # type: (str, str, str, str, frozenset) -> GraspLabel
        compound = dict(self.compound_states)
        for rule in self.rules:
            if (
                _match(rule.task, task)
                and _match_state(rule.state, state, compound)
                and _match(rule.grasp_affordance, grasp_affordance)
                and _match(rule.material, grasp_material)
                and _match_object(rule.object_pattern, object_affordances)
            ):
                return rule.label
        return self.default_label


COMPOUND_STATES = (("filled_hot", ("filled", "hot")),)

DEFAULT_RULES = RuleTable(
    rules=(
        # Contexts in which no grasp can serve the task
        Rule("hammer", "*", "*", "*", NS, object_pattern="!support|pound|hit"),
        Rule("scoop", "*", "*", "*", NS, object_pattern="!scoop|contain"),
        Rule("pour", "*", "*", "*", NS, object_pattern="!contain"),
        Rule("cut", "*", "*", "*", NS, object_pattern="!cut|support"),

        Rule("pour", "*", "contain", "*", NS),
        Rule("pour", "*", "wrap_grasp|grasp", "*", S),

        Rule("scoop", "*", "grasp|wrap_grasp", "*", S),
        Rule("scoop", "*", "scoop|contain", "*", NS),

        Rule("poke", "*", "grasp", "*", S),
        Rule("poke", "*", "contain", "*", NS),

        Rule("cut", "*", "grasp", "*", S),
        Rule("cut", "*", "support|cut", "*", NS),

        Rule("lift", "hot", "*", "metal", NS),
        Rule("lift", "filled", "contain", "*", NS),
        Rule("lift", "*", "*", "*", S),

        Rule("hammer", "*", "grasp", "wood|plastic", S),
        Rule("hammer", "*", "*", "*", NS),

        Rule("handover", "filled+hot", "contain", "*", NS),
        Rule("handover", "empty", "contain", "*", N),
        Rule("handover", "*", "contain", "*", NS),
        Rule("handover", "hot", "wrap_grasp", "metal|ceramic|glass", NS),
        Rule("handover", "*", "*", "*", S),
    ),
    default_label=N,
    compound_states=COMPOUND_STATES,
)
""" Rules in the spirit of the everyday cases: avoid the opening when
pouring, the opening is acceptable for handing over an empty cup, hot metal
is not grasped, and some task/object pairs are infeasible. """

AFFORDANCE_RULES = RuleTable(
    rules=(
        # Which part to hold depends on what else the object offers,
        # never on its class, state or material.
        Rule("pour", "*", "grasp", "*", S),
        Rule("pour", "*", "wrap_grasp", "*", NS, object_pattern="grasp"),
        Rule("pour", "*", "wrap_grasp", "*", S),
        Rule("pour", "*", "*", "*", NS),

        Rule("scoop", "*", "grasp", "*", S, object_pattern="scoop"),
        Rule("scoop", "*", "wrap_grasp", "*", S, object_pattern="!grasp"),
        Rule("scoop", "*", "*", "*", NS),

        Rule("poke", "*", "support|none", "*", S),
        Rule("poke", "*", "grasp|wrap_grasp", "*", NS, object_pattern="support|none"),
        Rule("poke", "*", "grasp", "*", S),
        Rule("poke", "*", "*", "*", NS),

        Rule("cut", "*", "support", "*", NS),
        Rule("cut", "*", "grasp", "*", S, object_pattern="support"),
        Rule("cut", "*", "*", "*", NS),

        Rule("lift", "*", "contain", "*", S, object_pattern="!wrap_grasp"),
        Rule("lift", "*", "wrap_grasp", "*", S),
        Rule("lift", "*", "*", "*", NS),

        Rule("hammer", "*", "grasp", "*", S, object_pattern="support"),
        Rule("hammer", "*", "*", "*", NS),

        Rule("handover", "*", "contain", "*", S, object_pattern="none"),
        Rule("handover", "*", "wrap_grasp|grasp", "*", NS, object_pattern="none"),
        Rule("handover", "*", "wrap_grasp", "*", S),
        Rule("handover", "*", "grasp", "*", S),
        Rule("handover", "*", "*", "*", NS),
    ),
    default_label=N,
    compound_states=COMPOUND_STATES,
)
""" Class-agnostic rules: labels depend only on the grasp affordance and on
the set of part affordances of the object. """

_JOINT_AFFORDANCES = ("grasp", "wrap_grasp", "contain", "support")


def joint_task_state_rules(tasks, states):
    # type: (tuple, tuple) -> RuleTable
    """ A rule table whose preferred grasp affordance depends on task and
    state together: neither the task nor the state alone predicts it. """
    rules = []
    for task_index, task in enumerate(tasks):
        for state_index, state in enumerate(states):
            shift = task_index + 2 * state_index
            rules.append(Rule(task, state, _JOINT_AFFORDANCES[shift % 4], "*", S))
            rules.append(Rule(task, state, _JOINT_AFFORDANCES[(shift + 1) % 4], "*", N))
    rules.append(Rule("*", "*", "*", "*", NS))
    return RuleTable(rules, default_label=NS)


class GeneratorConfig(namedtuple("GeneratorConfig", [
    "object_classes",
    "objects_per_class",
    "tasks",
    "states",
    "states_per_task",
    "grasps_per_context",
    "rule_table",
    "points_per_part",
    "grasp_noise",
    "material_noise",
], defaults=(
    ("cup", "spatula", "bowl", "pan", "bottle"),
    8,
    DEFAULT_VOCABULARIES.tasks,
    DEFAULT_VOCABULARIES.states + ("filled_hot",),
    1,
    20,
    DEFAULT_RULES,
    40,
    0.003,
    0.0,
))):
    """ Settings of `generate_synthetic()`.

    Attributes:
        object_classes (tuple[str]): Classes to instantiate (subset of the default classes).
        objects_per_class (int): Instances per class.
        tasks (tuple[str]): Tasks paired with every object.
        states (tuple[str]): States drawn for contexts; compound states of the
            rule table are registered in the vocabularies.
        states_per_task (int): Contexts per (object, task) pair.
        grasps_per_context (int): Grasp candidates per context.
        rule_table (RuleTable): The labeling oracle.
        points_per_part (int): Surface samples per part.
        grasp_noise (float): Standard deviation (meters) of the grasp center around its part.
        material_noise (float): Probability that a part's recorded material is
            replaced by a random one (labels still follow the true material).
    """
    __slots__ = ()


def _validate_config(config):
    # type: (GeneratorConfig) -> None
    for name in ("objects_per_class", "states_per_task", "grasps_per_context", "points_per_part"):
        if int(getattr(config, name)) < 1:
            raise DatasetError("'%s' must be at least 1 (got %r)." % (name, getattr(config, name)))
    for name in ("object_classes", "tasks", "states"):
        if not getattr(config, name):
            raise DatasetError("'%s' must not be empty." % name)
    unknown = [_class for _class in config.object_classes if _class not in _SHAPES]
    if unknown:
        raise DatasetError("No shape template for object classes: %s" % ", ".join(unknown))
    if not isinstance(config.rule_table, RuleTable):
        raise DatasetError("'rule_table' must be a 'RuleTable' (got %r)." % type(config.rule_table))
    if not 0.0 <= config.material_noise <= 1.0:
        raise DatasetError("'material_noise' must be a probability (got %r)." % config.material_noise)


# --- Primitive surfaces

def _pick(rng, options):
    return str(options[int(rng.integers(len(options)))])


def _cylinder(rng, count, radius, z_low, z_high, center=(0.0, 0.0)):
    angles = rng.uniform(0.0, 2.0 * np.pi, count)
    heights = rng.uniform(z_low, z_high, count)
    return np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles), heights])


def _ring(rng, count, inner, outer, z):
    angles = rng.uniform(0.0, 2.0 * np.pi, count)
    radii = np.sqrt(rng.uniform(inner * inner, outer * outer, count))
    return np.column_stack([radii * np.cos(angles), radii * np.sin(angles), np.full(count, z)])


def _box(rng, count, low, high):
    return rng.uniform(low, high, (count, 3))


def _cup(rng, count, instance):
    radius, height = rng.uniform(0.035, 0.05), rng.uniform(0.08, 0.12)
    material = _pick(rng, ["ceramic", "plastic", "glass", "metal", "paper"])
    parts = [
        ("wrap_grasp", material, _cylinder(rng, count, radius, 0.0, 0.7 * height)),
        ("contain", material, np.vstack([
            _cylinder(rng, count // 2, radius, 0.82 * height, height),
            _ring(rng, count - count // 2, 0.85 * radius, radius, height),
        ])),
    ]
    if instance % 2 == 0:
        parts.append(("grasp", material, _box(
            rng, count, (radius + 0.012, -0.006, 0.25 * height), (radius + 0.03, 0.006, 0.6 * height),
        )))
    return parts


def _bowl(rng, count, instance):
    radius, height = rng.uniform(0.06, 0.09), rng.uniform(0.05, 0.08)
    material = _pick(rng, ["ceramic", "plastic", "metal", "glass", "wood", "stone"])
    return [
        ("wrap_grasp", material, _cylinder(rng, count, 0.8 * radius, 0.0, 0.55 * height)),
        ("contain", material, np.vstack([
            _cylinder(rng, count // 2, radius, 0.75 * height, height),
            _ring(rng, count - count // 2, 0.88 * radius, radius, height),
        ])),
    ]


def _pan(rng, count, instance):
    radius, height = rng.uniform(0.09, 0.12), rng.uniform(0.04, 0.06)
    return [
        ("contain", "metal", np.vstack([
            _cylinder(rng, count // 2, radius, 0.3 * height, height),
            _ring(rng, count - count // 2, 0.9 * radius, radius, height),
        ])),
        ("support", "metal", _ring(rng, count, 0.0, 0.85 * radius, 0.0)),
        ("grasp", _pick(rng, ["plastic", "wood", "metal"]), _box(
            rng, count, (radius + 0.02, -0.01, 0.5 * height), (radius + 0.15, 0.01, 0.7 * height),
        )),
    ]


def _bottle(rng, count, instance):
    radius, height = rng.uniform(0.03, 0.045), rng.uniform(0.18, 0.26)
    return [
        ("wrap_grasp", _pick(rng, ["glass", "plastic", "metal"]), _cylinder(rng, count, radius, 0.0, 0.6 * height)),
        ("contain", _pick(rng, ["glass", "plastic"]), _cylinder(rng, count, 0.4 * radius, 0.68 * height, 0.88 * height)),
        ("none", _pick(rng, ["plastic", "metal"]), _cylinder(rng, count, 0.45 * radius, 0.93 * height, height)),
    ]


def _spatula(rng, count, instance):
    length = rng.uniform(0.13, 0.18)
    blade = "support" if instance % 2 == 0 else "scoop"
    return [
        ("grasp", _pick(rng, ["wood", "plastic", "metal"]), _box(rng, count, (0.0, -0.008, 0.0), (length, 0.008, 0.01))),
        (blade, _pick(rng, ["metal", "plastic"]), _box(
            rng, count, (length + 0.02, -0.035, 0.0), (length + 0.11, 0.035, 0.004),
        )),
    ]


_SHAPES = {
    "cup": _cup,
    "bowl": _bowl,
    "pan": _pan,
    "bottle": _bottle,
    "spatula": _spatula,
}


def _make_object(rng, object_id, object_class, instance, config, materials):
    parts, points, true_materials = [], [], []
    for affordance, material, cloud in _SHAPES[object_class](rng, config.points_per_part, instance):
        start = len(points)
        points.extend([tuple(quantize(_value) for _value in _row) for _row in cloud.tolist()])
        observed = material
        if config.material_noise > 0.0 and rng.uniform() < config.material_noise:
            observed = _pick(rng, materials)
        parts.append(Part(affordance, observed, range(start, len(points))))
        true_materials.append(material)
    return PartLabeledObject(object_id, object_class, points, parts), tuple(true_materials)


def _random_quaternion(rng):
    while True:
        quaternion = rng.normal(size=4)
        norm = float(np.sqrt(np.sum(quaternion * quaternion)))
        if norm > 1e-3:
            return tuple(quantize(_value / norm) for _value in quaternion.tolist())


def _sample_position(rng, obj, part_index, noise, owners):
    """ A grasp center near a random point of the part, whose nearest
    object point still belongs to that part. """
    part = obj.parts[part_index]
    for _ in range(100):
        anchor = np.asarray(obj.points[part.point_indices[int(rng.integers(len(part.point_indices)))]])
        position = tuple(quantize(_value) for _value in (anchor + rng.normal(0.0, noise, 3)).tolist())
        nearest, _ = linear_scan_nearest(obj.points, position)
        if owners[nearest] == part_index:
            return position
    return tuple(obj.points[part.point_indices[0]])


def oracle_label(rule_table, context, part_index, material=None):
    # type: (RuleTable, Context, int, str|None) -> GraspLabel
    """ Label the rule table gives to a grasp on `part_index` in `context`.

    Args:
        material (str, optional): True material of the part, when it differs
            from the recorded one. Defaults to the recorded material.
    """
    part = context.object.parts[part_index]
    affordances = frozenset(_part.affordance for _part in context.object.parts)
    return rule_table.label(context.task, context.state, part.affordance, material or part.material, affordances)


def is_feasible(rule_table, context):
    # type: (RuleTable, Context) -> bool
    """ Whether at least one part of the object is Suitable for the context. """
    return any(
        oracle_label(rule_table, context, _index) == GraspLabel.SUITABLE
        for _index in range(context.object.num_parts)
    )


def generate_synthetic(config=None, seed=0):
    # type: (GeneratorConfig|None, int) -> Dataset
    """ Generate a labeled dataset.

    Deterministic for a fixed `(config, seed)`.

    Raises:
        DatasetError: Invalid counts, empty lists or empty rule table.
    """
    config = config or GeneratorConfig()
    _validate_config(config)
    rng = np.random.default_rng(seed)

    compound = [_state for _state, _ in config.rule_table.compound_states]
    vocabularies = DEFAULT_VOCABULARIES.extended(
        tasks=config.tasks,
        states=list(config.states) + [_state for _state in compound if _state not in config.states],
    )

    objects, contexts, grasps = [], [], {}
    for object_class in config.object_classes:
        for instance in range(config.objects_per_class):
            object_id = "%s-%02d" % (object_class, instance)
            obj, true_materials = _make_object(rng, object_id, object_class, instance, config, vocabularies.materials)
            objects.append(obj)
            owners = obj.point_owners()

            for task in config.tasks:
                for repeat in range(config.states_per_task):
                    state = str(config.states[int(rng.integers(len(config.states)))])
                    context = Context("%s/%s/%d" % (object_id, task, repeat), task, state, obj)
                    contexts.append(context)

                    context_grasps = []
                    for _ in range(config.grasps_per_context):
                        part_index = int(rng.integers(obj.num_parts))
                        context_grasps.append(LabeledGrasp(
                            position=_sample_position(rng, obj, part_index, config.grasp_noise, owners),
                            orientation=_random_quaternion(rng),
                            label=oracle_label(config.rule_table, context, part_index, true_materials[part_index]),
                            part=part_index,
                        ))
                    grasps[context.context_id] = context_grasps

    dataset = Dataset(vocabularies, objects, contexts, grasps, {
        "generator": "synthetic",
        "seed": int(seed),
        "tool_version": __version__,
    })
    logger.info("Generated %d objects, %d contexts, %d grasps (seed %d)", len(objects), len(contexts), dataset.num_grasps, seed)
    return dataset
