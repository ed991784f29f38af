"""SVG scatter rendering."""

import re

import numpy as np
import pytest

from vitcluster.exceptions import AlignmentError, DimensionError
from vitcluster.plotting import palette, render_scatter

POINTS = np.array([[0.0, 0.0], [1.0, 0.5], [8.0, 8.0], [9.0, 7.5]])
LABELS = np.array([0, 0, 1, 1])


def circles(svg):
    return re.findall(r"<circle[^>]*>", svg)


class TestRenderScatter:
    def test_marker_and_legend_counts(self):
        svg = render_scatter(POINTS, LABELS)
        assert len(circles(svg)) == 4
        assert "cluster 0 (n=2)" in svg
        assert "cluster 1 (n=2)" in svg
        assert svg.startswith("<svg ")
        assert svg.rstrip().endswith("</svg>")

    def test_empty_projection_is_valid(self):
        svg = render_scatter(np.empty((0, 2)), np.empty(0, dtype=int))
        assert "<svg " in svg and "</svg>" in svg
        assert not circles(svg)
        assert "cluster" not in svg

    def test_highlight_ring(self):
        svg = render_scatter(POINTS, LABELS, record_ids=np.array([5, 6, 7, 8]),
                             highlight=(6,))
        rings = [c for c in circles(svg) if 'stroke="#111111"' in c]
        assert len(rings) == 1
        assert len(circles(svg)) == 5

    def test_byte_identical(self):
        a = render_scatter(POINTS, LABELS, width=640, height=480)
        b = render_scatter(POINTS, LABELS, width=640, height=480)
        assert a == b

    def test_coordinates_inside_canvas(self):
        svg = render_scatter(POINTS, LABELS, width=400, height=300)
        for c in circles(svg):
            cx = float(re.search(r'cx="([^"]+)"', c).group(1))
            cy = float(re.search(r'cy="([^"]+)"', c).group(1))
            assert 0.0 <= cx <= 400.0
            assert 0.0 <= cy <= 300.0

    def test_radius_applied(self):
        svg = render_scatter(POINTS, LABELS, point_radius=7.0)
        assert circles(svg)[0].count('r="7.00"') == 1

    def test_single_point_degenerate_span(self):
        svg = render_scatter(np.array([[2.0, 2.0]]), np.array([0]))
        assert len(circles(svg)) == 1

    def test_wrong_dimension(self):
        with pytest.raises(DimensionError):
            render_scatter(np.zeros((3, 4)), np.zeros(3, dtype=int))
        with pytest.raises(DimensionError):
            render_scatter(np.zeros((3, 1)), np.zeros(3, dtype=int))

    def test_misaligned_labels(self):
        with pytest.raises(AlignmentError):
            render_scatter(POINTS, np.array([0, 1]))

    def test_custom_colors(self):
        svg = render_scatter(POINTS, LABELS, colors=["#123456", "#abcdef"])
        assert 'fill="#123456"' in svg
        with pytest.raises(ValueError):
            render_scatter(POINTS, LABELS, colors=["#123456"])


class TestPalette:
    def test_distinct_hex_colors(self):
        colors = palette(12)
        assert len(colors) == len(set(colors)) == 12
        assert all(re.fullmatch(r"#[0-9a-f]{6}", c) for c in colors)

    def test_zero_floors_to_one_color(self):
        assert len(palette(0)) == 1
