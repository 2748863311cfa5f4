""" Nearest-point search over object point clouds and grasp-to-part assignment.

The grasp semantics are read off the object part closest to the grasp
center: `assign_grasp_to_part()` finds the point nearest to the grasp
position with a kd-tree and returns the part that owns it.
"""
import math as _math
from collections import OrderedDict

import numpy as np

from semgrasp.errors import GeometryError

__all__ = [
    "KdTree",
    "build_kdtree",
    "nearest_point",
    "linear_scan_nearest",
    "assign_grasp_to_part",
]


def _as_cloud(points):
    # type: (object) -> np.ndarray
    try:
        cloud = np.asarray(points, dtype=np.float64)
    except (TypeError, ValueError):
        raise GeometryError("Points must be a sequence of 3D coordinates.")
    if cloud.ndim != 2 or cloud.shape[1] != 3:
        raise GeometryError("Points must have shape (n, 3) (got %s)." % (cloud.shape,))
    if cloud.shape[0] == 0:
        raise GeometryError("Cannot search an empty point cloud.")
    if not np.all(np.isfinite(cloud)):
        raise GeometryError("Point coordinates must be finite.")
    return cloud


def _as_query(query):
    # type: (object) -> tuple
    try:
        query = tuple(float(_value) for _value in query)
    except (TypeError, ValueError):
        raise GeometryError("A query must be a 3D point (got %r)." % (query,))
    if len(query) != 3:
        raise GeometryError("A query must be a 3D point (got %d coordinates)." % len(query))
    if not all(_math.isfinite(_value) for _value in query):
        raise GeometryError("Query coordinates must be finite (got %r)." % (query,))
    return query


class KdTree:
    """ Balanced 3D kd-tree over a point sequence.

    Queries return exactly what an exhaustive scan returns: the smallest
    squared distance (computed as `dx*dx + dy*dy + dz*dz`) and, among equal
    distances, the lowest original index.

    Args:
        points (array-like): `(n, 3)` coordinates.
        indices (array-like, optional): Original index of each point.
            Defaults to `0..n-1`.
    """
    def __init__(self, points, indices=None):
        cloud = _as_cloud(points)
        if indices is None:
            indices = np.arange(cloud.shape[0])
        indices = np.asarray(indices, dtype=np.int64)
        if indices.shape != (cloud.shape[0],):
            raise GeometryError("Expected one index per point (got %d indices for %d points)." % (indices.size, cloud.shape[0]))

        self.size = cloud.shape[0]
        self._coords = [tuple(_row) for _row in cloud.tolist()]
        self._original = indices.tolist()
        self._original_array = indices

        # Node arrays: position in `_coords`, split axis, children (-1 = none)
        self._node_point = []  # type: list[int]
        self._node_axis = []  # type: list[int]
        self._left = []  # type: list[int]
        self._right = []  # type: list[int]
        self._root = self._build(cloud, np.arange(self.size), 0)

    def _build(self, cloud, positions, depth):
        # type: (np.ndarray, np.ndarray, int) -> int
        if positions.size == 0:
            return -1

        axis = depth % 3
        # Sort by coordinate, then by original index: deterministic medians
        order = np.lexsort((self._original_array[positions], cloud[positions, axis]))
        positions = positions[order]
        middle = positions.size // 2

        node = len(self._node_point)
        self._node_point.append(int(positions[middle]))
        self._node_axis.append(axis)
        self._left.append(-1)
        self._right.append(-1)

        self._left[node] = self._build(cloud, positions[:middle], depth + 1)
        self._right[node] = self._build(cloud, positions[middle + 1:], depth + 1)
        return node

    def nearest(self, query):
        # type: (object) -> tuple[int, float]
        """ Original index of the point nearest to `query`, and its distance. """
        query = _as_query(query)
        best = [_math.inf, -1]
        self._search(self._root, query, best)
        return best[1], _math.sqrt(best[0])

    def _search(self, node, query, best):
        if node < 0:
            return

        position = self._node_point[node]
        point = self._coords[position]
        dx = query[0] - point[0]
        dy = query[1] - point[1]
        dz = query[2] - point[2]
        squared = dx * dx + dy * dy + dz * dz
        index = self._original[position]
        if squared < best[0] or (squared == best[0] and index < best[1]):
            best[0], best[1] = squared, index

        axis = self._node_axis[node]
        offset = query[axis] - point[axis]
        if offset < 0:
            near, far = self._left[node], self._right[node]
        else:
            near, far = self._right[node], self._left[node]

        self._search(near, query, best)
        # `<=`: the far side may hold an equally distant point with a lower index
        if offset * offset <= best[0]:
            self._search(far, query, best)

    def __repr__(self):
        return "<%s size=%d>" % (self.__class__.__name__, self.size)


def build_kdtree(points):
    # type: (object) -> KdTree
    """ Build a kd-tree over `points`.

    Raises:
        GeometryError: On an empty cloud or a non-finite coordinate.
    """
    return KdTree(points)


def nearest_point(tree, query):
    # type: (KdTree, object) -> tuple[int, float]
    """ Index of the stored point nearest to `query` and the Euclidean distance to it.

    Examples:
        ```pycon
        >>> nearest_point(build_kdtree([(0, 0, 0), (1, 0, 0)]), (0.5, 0, 0))
        (0, 0.5)
        ```
    """
    return tree.nearest(query)


def linear_scan_nearest(points, query):
    # type: (object, object) -> tuple[int, float]
    """ Exhaustive nearest-point search, same arithmetic and tie-break as `KdTree`. """
    cloud = _as_cloud(points)
    query = _as_query(query)
    dx = query[0] - cloud[:, 0]
    dy = query[1] - cloud[:, 1]
    dz = query[2] - cloud[:, 2]
    squared = dx * dx + dy * dy + dz * dz
    index = int(np.argmin(squared))
    return index, _math.sqrt(float(squared[index]))


PART_TREE_CACHE_SIZE = 512

_part_trees = OrderedDict()


def _part_tree(obj):
    """ Kd-tree over the points owned by some part of `obj`, plus the owner of each point.

    Trees are cached per object identity: the key holds the ids of the
    point and part tuples, and an entry is only reused while it still
    refers to those very tuples.
    """
    key = (obj.object_id, id(obj.points), id(obj.parts))
    entry = _part_trees.get(key)
    if entry is not None and entry[0] is obj.points and entry[1] is obj.parts:
        _part_trees.move_to_end(key)
        return entry[2], entry[3]

    owners = obj.point_owners()
    owned = [_index for _index, _owner in enumerate(owners) if _owner >= 0]
    tree = KdTree([obj.points[_index] for _index in owned], indices=owned)
    _part_trees[key] = (obj.points, obj.parts, tree, owners)
    if len(_part_trees) > PART_TREE_CACHE_SIZE:
        _part_trees.popitem(last=False)
    return tree, owners


def assign_grasp_to_part(obj, grasp):
    """ Index of the part of `obj` owning the point nearest to the grasp center.

    Only the grasp position is used; the orientation plays no role.

    Args:
        obj (PartLabeledObject): The grasped object.
        grasp (LabeledGrasp): The grasp candidate.

    Returns:
        int: Index into `obj.parts`.
    """
    tree, owners = _part_tree(obj)
    index, _ = tree.nearest(grasp.position)
    return owners[index]
