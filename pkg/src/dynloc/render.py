"""Deterministic SVG 1.1 rendering of scenes, measurement rays, and
localization candidates.

Output is byte-identical for fixed inputs: coordinates are serialized with
repr (shortest round-trip form) and elements are emitted in a fixed order.
The drawing is flipped so the y axis points up; segment lengths are
preserved, so ray lines can be parsed back to recover measured distances.
"""
from __future__ import annotations

import math
from typing import Optional

from .fusion import LocalizationResult
from .geometry import Polygon, aabb, compose
from .simworld import Scene, TrialSetup

STATIC_RAY_COLOR = "#cc00cc"  # magenta: rays that sampled the static boundary
DYNAMIC_RAY_COLOR = "#dd2222"  # red: rays that sampled a dynamic obstacle


def _f(x: float) -> str:
    return repr(float(x))


def _path(poly: Polygon) -> str:
    parts = []
    for ring in poly.rings():
        pts = ["%s %s" % (_f(x), _f(y)) for x, y in ring]
        parts.append("M " + " L ".join(pts) + " Z")
    return " ".join(parts)


def render_svg(
    scene: Scene,
    trial: Optional[TrialSetup] = None,
    result: Optional[LocalizationResult] = None,
    path: Optional[str] = None,
    t: float = 0.0,
) -> str:
    """Render a scene (plus optional trial rays and candidates) to SVG text,
    writing it to ``path`` when given."""
    lo, hi = aabb(scene.workspace)
    pad = 0.05 * max(hi.x - lo.x, hi.y - lo.y)
    vb = (lo.x - pad, lo.y - pad, (hi.x - lo.x) + 2 * pad, (hi.y - lo.y) + 2 * pad)
    stroke = 0.008 * max(vb[2], vb[3])
    marker = 2.5 * stroke

    out = []
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        'viewBox="%s %s %s %s">' % tuple(_f(v) for v in vb)
    )
    # Flip y so the drawing matches math coordinates; lengths are unchanged.
    out.append('<g transform="translate(0 %s) scale(1 -1)">' % _f(lo.y + hi.y))
    out.append(
        '<path class="workspace" fill-rule="evenodd" fill="#d9d9d9" '
        'stroke="#333333" stroke-width="%s" d="%s"/>' % (_f(stroke), _path(scene.workspace))
    )
    for i, obs in enumerate(scene.obstacles):
        out.append(
            '<path class="obstacle" fill="#8899bb" stroke="#445577" '
            'stroke-width="%s" d="%s"/>' % (_f(stroke), _path(obs.placed(t)))
        )
    if trial is not None:
        q = trial.ground_truth
        for m, hit_static in zip(trial.measurements, trial.static_flags):
            o = compose(q, m.g)
            x2 = o.position.x + m.d * math.cos(o.theta)
            y2 = o.position.y + m.d * math.sin(o.theta)
            color = STATIC_RAY_COLOR if hit_static else DYNAMIC_RAY_COLOR
            cls = "ray ray-static" if hit_static else "ray ray-dynamic"
            out.append(
                '<line class="%s" stroke="%s" stroke-width="%s" '
                'x1="%s" y1="%s" x2="%s" y2="%s"/>'
                % (cls, color, _f(stroke), _f(o.position.x), _f(o.position.y), _f(x2), _f(y2))
            )
        out.append(
            '<circle class="ground-truth" fill="#2255dd" cx="%s" cy="%s" r="%s"/>'
            % (_f(q.position.x), _f(q.position.y), _f(marker))
        )
        out.append(
            '<line class="ground-truth-heading" stroke="#2255dd" stroke-width="%s" '
            'x1="%s" y1="%s" x2="%s" y2="%s"/>'
            % (
                _f(stroke),
                _f(q.position.x),
                _f(q.position.y),
                _f(q.position.x + 2 * marker * math.cos(q.theta)),
                _f(q.position.y + 2 * marker * math.sin(q.theta)),
            )
        )
    if result is not None:
        for cand in result.candidates:
            cx, cy = cand.pose.position.x, cand.pose.position.y
            r = marker
            out.append(
                '<path class="candidate" stroke="#119944" fill="none" '
                'stroke-width="%s" d="M %s %s L %s %s M %s %s L %s %s"/>'
                % (
                    _f(stroke),
                    _f(cx - r), _f(cy - r), _f(cx + r), _f(cy + r),
                    _f(cx - r), _f(cy + r), _f(cx + r), _f(cy - r),
                )
            )
    out.append("</g>")
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
