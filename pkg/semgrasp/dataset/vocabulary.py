""" Label vocabularies of the semantic features. """
from collections import namedtuple

from semgrasp.errors import DatasetError, VocabularyError

__all__ = ["Vocabularies", "DEFAULT_VOCABULARIES", "VOCABULARY_KINDS"]

VOCABULARY_KINDS = ("object_classes", "materials", "tasks", "states", "affordances")


class Vocabularies(namedtuple("Vocabularies", VOCABULARY_KINDS)):
    """ The five label sets of a dataset.

    Each field is a tuple of unique labels; the position of a label is its
    index in one-hot encodings and embedding tables. Lookups are exact and
    case-sensitive.

    Examples:
        ```pycon
        >>> DEFAULT_VOCABULARIES.index("tasks", "pour")
        0
        >>> DEFAULT_VOCABULARIES.label("states", 5)
        'lid_off'
        ```
    """
    __slots__ = ()

    def __new__(cls, object_classes, materials, tasks, states, affordances):
        fields = []
        for kind, labels in zip(VOCABULARY_KINDS, (object_classes, materials, tasks, states, affordances)):
            labels = tuple(labels)
            if not labels:
                raise DatasetError("Vocabulary '%s' must not be empty." % kind)
            for label in labels:
                if not isinstance(label, str) or label == "":
                    raise DatasetError("Vocabulary '%s' contains an invalid label (got %r)." % (kind, label))
            if len(set(labels)) != len(labels):
                raise DatasetError("Vocabulary '%s' contains duplicate labels (got %r)." % (kind, labels))
            fields.append(labels)
        return super(Vocabularies, cls).__new__(cls, *fields)

    def index(self, kind, label, line_number=None):
        # type: (str, str, int|None) -> int
        """ Index of `label` within the vocabulary `kind`.

        Raises:
            VocabularyError: If the label is not registered.
        """
        labels = getattr(self, kind)
        try:
            return labels.index(label)
        except ValueError:
            raise VocabularyError(kind, label, line_number)

    def label(self, kind, index):
        # type: (str, int) -> str
        """ Label at position `index` of the vocabulary `kind`. """
        labels = getattr(self, kind)
        if not 0 <= index < len(labels):
            raise VocabularyError(kind, "#%d" % index)
        return labels[index]

    def check(self, kind, label, line_number=None):
        # type: (str, str, int|None) -> str
        """ Return `label` unchanged if it belongs to `kind`, raise otherwise. """
        self.index(kind, label, line_number)
        return label

    def size(self, kind):
        # type: (str) -> int
        return len(getattr(self, kind))

    def extended(self, **labels):
        """ Copy of these vocabularies with extra labels appended.

        Examples:
            ```pycon
            >>> DEFAULT_VOCABULARIES.extended(states=["filled_hot"]).states[-1]
            'filled_hot'
            ```
        """
        fields = {}
        for kind in VOCABULARY_KINDS:
            current = list(getattr(self, kind))
            current.extend([_label for _label in labels.pop(kind, ()) if _label not in current])
            fields[kind] = current
        if labels:
            raise DatasetError("Unknown vocabulary kinds: %s" % ", ".join(sorted(labels)))
        return Vocabularies(**fields)

    def to_dict(self):
        # type: () -> dict
        return dict((kind, list(getattr(self, kind))) for kind in VOCABULARY_KINDS)

    @classmethod
    def from_dict(cls, data):
        # type: (dict) -> Vocabularies
        missing = [kind for kind in VOCABULARY_KINDS if kind not in data]
        if missing:
            raise DatasetError("Missing vocabularies: %s" % ", ".join(missing))
        return cls(**dict((kind, data[kind]) for kind in VOCABULARY_KINDS))


DEFAULT_VOCABULARIES = Vocabularies(
    object_classes=("cup", "spatula", "bowl", "pan", "bottle"),
    materials=("plastic", "metal", "ceramic", "glass", "stone", "paper", "wood"),
    tasks=("pour", "scoop", "poke", "cut", "lift", "hammer", "handover"),
    states=("hot", "cold", "empty", "filled", "lid_on", "lid_off"),
    affordances=("contain", "cut", "display", "engine", "grasp", "hit", "pound", "support", "wrap_grasp", "scoop", "none"),
)
""" Label sets of the SG14000 dataset (object states use underscores). """
