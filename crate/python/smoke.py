"""Smoke test for the geopub_py extension.

Build and install first:
    pip install maturin
    maturin develop -m crates/py/Cargo.toml --release
then run `python python/smoke.py` from the repository root.
"""

import json
import pathlib
import tempfile
import xml.etree.ElementTree as ET
import zipfile
import io

import geopub_py as g

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "tests" / "fixtures"
BASE_URI = "https://data.example.org/rc"
SERVICE_URL = "https://data.example.org"


def main():
    features, report = g.parse_dataset((FIXTURES / "features.csv").read_text())
    assert report.accepted == 231 and not report.rejected, report.rejected
    gazetteer = g.load_gazetteer((FIXTURES / "gazetteer.csv").read_text())
    features, (reconciled, unmatched, ambiguous) = g.reconcile_places(features, gazetteer)
    assert [name for name, _ in ambiguous] == ["Corus"]
    print(f"ingest: {len(features)} features, {reconciled} reconciled, {unmatched} unmatched")

    manifest = g.DatasetManifest(BASE_URI)
    index = g.FacetIndex(features)
    page = index.search("affiliation=Polis&per_page=500")
    polis = [f.id for f in features if f.affiliation == "Polis"]
    assert sorted(page.matches) == sorted(polis)
    assert sum(page.facet_counts["affiliation"].values()) == page.total
    print(f"search: {page.total} Polis records")

    geo = json.loads(index.feed("geojson", manifest, "affiliation=Polis&per_page=500"))
    kml = ET.fromstring(index.feed("kml", manifest, "affiliation=Polis&per_page=500"))
    placemarks = kml.findall(".//{http://www.opengis.net/kml/2.2}Placemark")
    assert len(geo["features"]) == len(placemarks) == page.total

    zones = g.compute_zones(features, (FIXTURES / "barrier.geojson").read_text())
    counts = zones.zone_counts()
    assert zones.steps == 160
    assert sum(counts.values()) == zones.n_cols * zones.n_rows
    assert zones.png()[:8] == b"\x89PNG\r\n\x1a\n"
    print(f"zones: {zones.n_cols}x{zones.n_rows}, {counts}")

    out = g.diffuse([1.0] + [0.0] * 24, [True] * 25, 5, 5, 0.25, 30)
    assert abs(sum(out) - 1.0) < 1e-12

    uri = manifest.record_uri("RC0304-T001")
    version, modules = g.qr_encode(uri)
    assert g.qr_decode(modules) == uri
    assert g.qr_scan(g.qr_png(uri, "H", 3)) == uri
    print(f"qr: version {version} for {uri}")

    article = (FIXTURES / "article.txt").read_text()
    files = g.export_article(article, index, manifest, "epub", SERVICE_URL, zones=zones,
                             build_time="2012-04-01T12:00:00Z")
    epub = zipfile.ZipFile(io.BytesIO(files["rc-funerary.epub"]))
    assert epub.namelist()[0] == "mimetype"
    assert epub.read("mimetype") == b"application/epub+zip"
    printed = g.export_article(article, index, manifest, "print", SERVICE_URL)
    assert g.qr_scan(printed["codes/header.png"]) == "https://visiblepast.example.org/articles/rc-funerary"
    print(f"export: epub with {len(epub.namelist())} entries, print tree with {len(printed)} files")

    with tempfile.TemporaryDirectory() as ws:
        code = g.run_cli(["ingest", str(FIXTURES / "features.csv"), str(FIXTURES / "gazetteer.csv"),
                          "--out", ws, "--base-uri", BASE_URI])
        assert code == 0, code
        assert g.run_cli(["zones", ws, str(FIXTURES / "barrier.geojson"), "--alpha", "0.3"]) == 2

    print("smoke test passed")


if __name__ == "__main__":
    main()
