""" Line-delimited reader and writer of the `cage-ds-1` dataset format.

Layout (UTF-8, one JSON document per line):

    line 1      header   {"format": "cage-ds-1", "vocabularies": {...}, "metadata": {...}}
    then        objects  {"record": "object", "object_id", "object_class", "points", "parts"}
    then        contexts {"record": "context", "context_id", "task", "state", "object_id"}
    then        grasps   {"record": "grasp", "context_id", "position", "orientation", "label"[, "part"]}

Numbers are written with 9 significant digits. Records must appear in the
order above.
"""
import json as _json
import logging as _logging
import os as _os
import tempfile as _tempfile

from semgrasp.dataset.records import (
    Context,
    Dataset,
    GraspLabel,
    LabeledGrasp,
    Part,
    PartLabeledObject,
    validate_dataset,
)
from semgrasp.dataset.vocabulary import Vocabularies
from semgrasp.errors import DatasetError, DatasetFormatError, VocabularyError

__all__ = ["FORMAT_VERSION", "load_dataset", "save_dataset", "dumps_dataset", "quantize"]

logger = _logging.getLogger(__name__)

FORMAT_VERSION = "cage-ds-1"

_RECORD_ORDER = ("object", "context", "grasp")


def quantize(value):
    # type: (float) -> float
    """ Round `value` to the 9 significant digits used on disk.

    Quantized values survive a save/load cycle unchanged.
    """
    return float("%.9g" % value)


def _numbers(values):
    return [quantize(_value) for _value in values]


def _dumps(document):
    # type: (dict) -> str
    return _json.dumps(document, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def dumps_dataset(dataset):
    # type: (Dataset) -> str
    """ Serialize a dataset to the text of a `cage-ds-1` file. """
    validate_dataset(dataset)

    lines = [_dumps({
        "format": FORMAT_VERSION,
        "vocabularies": dataset.vocabularies.to_dict(),
        "metadata": dataset.metadata,
    })]

    for obj in dataset.objects:
        lines.append(_dumps({
            "record": "object",
            "object_id": obj.object_id,
            "object_class": obj.object_class,
            "points": [_numbers(_point) for _point in obj.points],
            "parts": [
                {"affordance": _part.affordance, "material": _part.material, "points": list(_part.point_indices)}
                for _part in obj.parts
            ],
        }))

    for context in dataset.contexts:
        lines.append(_dumps({
            "record": "context",
            "context_id": context.context_id,
            "task": context.task,
            "state": context.state,
            "object_id": context.object.object_id,
        }))

    for context in dataset.contexts:
        for grasp in dataset.grasps[context.context_id]:
            record = {
                "record": "grasp",
                "context_id": context.context_id,
                "position": _numbers(grasp.position),
                "orientation": _numbers(grasp.orientation),
                "label": grasp.label.display_name,
            }
            if grasp.part is not None:
                record["part"] = grasp.part
            lines.append(_dumps(record))

    return "\n".join(lines) + "\n"


def save_dataset(dataset, path):
    # type: (Dataset, str) -> None
    """ Write `dataset` to `path`.

    The dataset is validated before anything is written, and the file is
    replaced atomically, so a failure never leaves a partial file behind.

    Raises:
        DatasetError: If the dataset violates an invariant.
        OSError: On I/O failure.
    """
    text = dumps_dataset(dataset)

    directory = _os.path.dirname(_os.path.abspath(path))
    handle, temporary = _tempfile.mkstemp(prefix=".dataset-", dir=directory)
    try:
        with _os.fdopen(handle, "w", encoding="utf-8", newline="\n") as _file:
            _file.write(text)
        _os.replace(temporary, path)
    except BaseException:
        if _os.path.exists(temporary):
            _os.remove(temporary)
        raise

    logger.info("Saved %d contexts and %d grasps to '%s'", len(dataset.contexts), dataset.num_grasps, path)


def _field(record, name, line_number):
    try:
        return record[name]
    except KeyError:
        raise DatasetFormatError("missing field '%s'" % name, line_number)
    except TypeError:
        raise DatasetFormatError("cannot read field '%s' of a %s" % (name, type(record).__name__), line_number)


def _parse_object(record, vocabularies, line_number):
    # type: (dict, Vocabularies, int) -> PartLabeledObject
    object_class = vocabularies.check("object_classes", _field(record, "object_class", line_number), line_number)
    parts = []
    for part in _field(record, "parts", line_number):
        parts.append(Part(
            affordance=vocabularies.check("affordances", _field(part, "affordance", line_number), line_number),
            material=vocabularies.check("materials", _field(part, "material", line_number), line_number),
            point_indices=_field(part, "points", line_number),
        ))
    return PartLabeledObject(
        object_id=_field(record, "object_id", line_number),
        object_class=object_class,
        points=_field(record, "points", line_number),
        parts=parts,
    )


def load_dataset(path):
    # type: (str) -> Dataset
    """ Read a `cage-ds-1` file.

    Raises:
        DatasetFormatError: Malformed record (the message carries the line number),
            or a record violating a structural invariant such as a
            non-unit quaternion.
        VocabularyError: A label missing from the header vocabularies.
        DatasetError: A dangling object/context reference or a context without grasps.
    """
    vocabularies = None
    metadata = {}
    objects, contexts, grasps = {}, [], {}
    stage = 0

    with open(path, "r", encoding="utf-8") as _file:
        for line_number, line in enumerate(_file, 1):
            if not line.strip():
                continue
            try:
                record = _json.loads(line)
            except ValueError as error:
                raise DatasetFormatError("invalid JSON (%s)" % error, line_number)
            if not isinstance(record, dict):
                raise DatasetFormatError("a record must be a JSON object", line_number)

            try:
                if vocabularies is None:
                    if record.get("format") != FORMAT_VERSION:
                        raise DatasetFormatError("expected a '%s' header (got format %r)" % (FORMAT_VERSION, record.get("format")), line_number)
                    vocabularies = Vocabularies.from_dict(_field(record, "vocabularies", line_number))
                    metadata = record.get("metadata", {})
                    continue

                kind = _field(record, "record", line_number)
                if kind not in _RECORD_ORDER:
                    raise DatasetFormatError("unknown record type %r" % (kind,), line_number)
                if _RECORD_ORDER.index(kind) < stage:
                    raise DatasetFormatError("'%s' record after '%s' records" % (kind, _RECORD_ORDER[stage]), line_number)
                stage = _RECORD_ORDER.index(kind)

                if kind == "object":
                    obj = _parse_object(record, vocabularies, line_number)
                    if obj.object_id in objects:
                        raise DatasetFormatError("duplicate object id '%s'" % obj.object_id, line_number)
                    objects[obj.object_id] = obj

                elif kind == "context":
                    object_id = str(_field(record, "object_id", line_number))
                    if object_id not in objects:
                        raise DatasetFormatError("context references unknown object '%s'" % object_id, line_number)
                    contexts.append(Context(
                        context_id=_field(record, "context_id", line_number),
                        task=vocabularies.check("tasks", _field(record, "task", line_number), line_number),
                        state=vocabularies.check("states", _field(record, "state", line_number), line_number),
                        object=objects[object_id],
                    ))
                    grasps[contexts[-1].context_id] = []

                else:
                    context_id = str(_field(record, "context_id", line_number))
                    if context_id not in grasps:
                        raise DatasetFormatError("grasp references unknown context '%s'" % context_id, line_number)
                    try:
                        label = GraspLabel.from_name(_field(record, "label", line_number))
                    except VocabularyError:
                        raise VocabularyError("labels", record["label"], line_number)
                    grasps[context_id].append(LabeledGrasp(
                        position=_field(record, "position", line_number),
                        orientation=_field(record, "orientation", line_number),
                        label=label,
                        part=record.get("part"),
                    ))
            except (DatasetFormatError, VocabularyError):
                raise
            except DatasetError as error:
                raise DatasetFormatError(str(error), line_number)
            except (TypeError, ValueError) as error:
                raise DatasetFormatError("malformed record (%s)" % error, line_number)

    if vocabularies is None:
        raise DatasetFormatError("empty file, expected a '%s' header" % FORMAT_VERSION, 1)

    dataset = Dataset(vocabularies, list(objects.values()), contexts, grasps, metadata)
    validate_dataset(dataset)
    logger.debug("Loaded %d contexts and %d grasps from '%s'", len(contexts), dataset.num_grasps, path)
    return dataset
