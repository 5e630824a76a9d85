#
# SVG drawings of transport plans between labeled point clouds
#
import io as _io

import matplotlib
import numpy as np
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure

from otda import io
from otda.exceptions import DimensionError

# plan entries below this are not drawn
SEGMENT_FLOOR = 1e-8
SVG_HASH_SALT = "otda"
CLASS_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown")


def segment_alphas(coupling):
    """Opacity of every plan entry: ``entry / max entry``, zero below the floor."""
    coupling = np.asarray(coupling, dtype=float)
    peak = coupling.max() if coupling.size else 0.0
    if peak <= SEGMENT_FLOOR:
        return np.zeros_like(coupling)
    alphas = coupling / peak
    alphas[coupling < SEGMENT_FLOOR] = 0.0
    return np.clip(alphas, 0.0, 1.0)


def _class_color(label):
    return CLASS_COLORS[int(label) % len(CLASS_COLORS)]


def draw_plan(ax, source, target, coupling, title=None):
    """Draw source (circles) and target (crosses) points coloured by class,
    joined by segments whose opacity follows the transported mass."""
    coupling = np.asarray(coupling, dtype=float)
    if coupling.shape != (len(source), len(target)):
        msg = f"plan of shape {coupling.shape} for {len(source)} and {len(target)} points"
        raise DimensionError(msg)
    if source.dim != 2 or target.dim != 2:
        msg = "plans are drawn for two-dimensional points only"
        raise DimensionError(msg)
    alphas = segment_alphas(coupling)
    rows, cols = np.nonzero(alphas)
    segments = np.stack([source.points[rows], target.points[cols]], axis=1)
    colors = np.zeros((rows.size, 4))
    colors[:, 3] = alphas[rows, cols]
    ax.add_collection(LineCollection(segments, colors=colors, linewidths=1.0))
    ax.scatter(
        source.points[:, 0],
        source.points[:, 1],
        c=[_class_color(k) for k in source.labels],
        marker="o",
        s=25,
        label="source",
    )
    ax.scatter(
        target.points[:, 0],
        target.points[:, 1],
        c=[_class_color(k) for k in target.labels],
        marker="x",
        s=25,
        label="target",
    )
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=9)


def plans_svg(panels, source, target, columns=3):
    """SVG text of a grid of plan panels.

    Parameters
    ----------
    panels : list of tuple
        ``(title, coupling)`` per panel, drawn row by row.
    source, target : :class:`otda.data.LabeledDataset`
    columns : int

    Returns
    -------
    str
        Byte-stable SVG: fixed hash salt and no date metadata.
    """
    columns = max(1, min(columns, len(panels)))
    rows = -(-len(panels) // columns)
    fig = Figure(figsize=(3.2 * columns, 3.2 * rows))
    for i, (title, coupling) in enumerate(panels):
        draw_plan(fig.add_subplot(rows, columns, i + 1), source, target, coupling, title)
    buffer = _io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def save_plans_svg(path, panels, source, target, columns=3):
    io.write_text(path, plans_svg(panels, source, target, columns))
