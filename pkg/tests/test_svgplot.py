import xml.etree.ElementTree as ET

import numpy as np

from singkrylov.svgplot import Curve, line_chart, write_chart

NS = "{http://www.w3.org/2000/svg}"


def _parse(text):
    return ET.fromstring(text.split("\n", 1)[1])


def test_one_polyline_per_curve():
    k = np.arange(1, 11)
    svg = _parse(line_chart([Curve("a", k, 10.0 ** -k), Curve("b", k, np.ones(10), dashed=True)]))
    lines = svg.findall(f"{NS}polyline")
    assert [p.find(f"{NS}title").text for p in lines] == ["a", "b"]
    assert "stroke-dasharray" in lines[1].attrib
    assert len(lines[0].attrib["points"].split()) == 10


def test_decade_ticks():
    k = np.arange(1, 5)
    svg = _parse(line_chart([Curve("a", k, [1e-1, 1e-3, 1e-5, 1e-7])]))
    ticks = [t.text for t in svg.iter(f"{NS}text") if t.attrib.get("class") == "ytick"]
    assert ticks[0] == "1e-7" and ticks[-1] == "1e-1" and len(ticks) == 7
    grid = [g for g in svg.iter(f"{NS}line") if g.attrib.get("class") == "grid"]
    assert len(grid) == 7


def test_non_positive_and_nan_points_dropped():
    svg = _parse(line_chart([Curve("a", [1, 2, 3, 4], [1.0, 0.0, np.nan, 1e-2])]))
    assert len(svg.find(f"{NS}polyline").attrib["points"].split()) == 2


def test_labels_escaped(tmp_path):
    path = tmp_path / "c.svg"
    write_chart(path, [Curve("x < y & z", [1, 2], [1, 2])], title="a<b")
    _parse(path.read_text())
    assert "x &lt; y &amp; z" in path.read_text()


def test_empty_curve_still_valid():
    _parse(line_chart([Curve("empty", [], [])]))
