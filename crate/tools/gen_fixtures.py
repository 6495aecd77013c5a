#!/usr/bin/env python3
"""Generate the bundled country fixtures (regions, flows, OD Maps grids).

Region boundaries are schematic: Voronoi cells of approximate region
centroids, clipped to coarse hand-drawn country outlines. Flows come from a
seeded gravity model. Grid assignments for OD Maps are produced once here
with a min-cost assignment of regions to grid cells and then shipped as data.

Usage: python3 tools/gen_fixtures.py [out_dir]
"""

import csv
import json
import math
import os
import sys

import numpy as np
from scipy.optimize import linear_sum_assignment
from shapely.geometry import MultiPoint, Point, Polygon, mapping
from shapely.geometry.polygon import orient
from shapely.ops import voronoi_diagram

# (id, name, lon, lat, outline piece)
COUNTRIES = {
    "au": {
        "outlines": {
            "mainland": [(113.5, -22.0), (114.2, -26.3), (115.0, -34.3), (117.9, -35.1), (123.5, -33.9),
                         (126.1, -32.3), (131.2, -31.5), (134.2, -32.6), (137.8, -35.7), (138.5, -34.0),
                         (140.0, -37.9), (141.6, -38.4), (144.5, -38.3), (146.4, -39.1), (150.0, -37.5),
                         (151.3, -33.8), (153.6, -28.2), (153.0, -25.0), (150.8, -22.6), (146.3, -18.9),
                         (145.4, -15.0), (143.5, -14.0), (142.5, -10.7), (141.6, -12.9), (141.5, -16.8),
                         (139.3, -17.4), (136.7, -15.9), (135.9, -13.3), (136.9, -12.2), (132.6, -11.4),
                         (130.2, -12.4), (129.3, -14.9), (126.2, -14.2), (122.2, -17.5), (119.0, -20.0),
                         (116.7, -20.6)],
            "tas": [(144.6, -40.7), (148.3, -40.9), (148.3, -42.2), (147.0, -43.6), (145.9, -43.5),
                    (145.2, -42.2)],
        },
        "regions": [
            ("NSW", "New South Wales", 147.0, -32.2, "mainland"),
            ("VIC", "Victoria", 144.3, -36.9, "mainland"),
            ("QLD", "Queensland", 144.5, -22.5, "mainland"),
            ("SA", "South Australia", 135.8, -30.0, "mainland"),
            ("WA", "Western Australia", 122.3, -25.5, "mainland"),
            ("TAS", "Tasmania", 146.6, -42.0, "tas"),
            ("NT", "Northern Territory", 133.4, -19.4, "mainland"),
            ("ACT", "Australian Capital Territory", 149.0, -35.5, "mainland"),
        ],
    },
    "nz": {
        "outlines": {
            "north": [(172.7, -34.4), (173.9, -35.0), (174.8, -36.2), (175.5, -36.5), (175.9, -37.3),
                      (177.0, -37.9), (178.5, -37.7), (178.3, -38.6), (177.9, -39.2), (176.9, -39.6),
                      (176.7, -40.2), (176.1, -41.0), (175.3, -41.6), (174.6, -41.3), (175.0, -40.6),
                      (174.3, -39.8), (173.8, -39.3), (174.6, -38.8), (174.7, -37.8), (174.2, -36.6),
                      (173.2, -35.5)],
            "south": [(172.7, -40.5), (173.9, -40.9), (174.3, -41.3), (174.0, -42.0), (173.2, -42.9),
                      (172.7, -43.8), (171.3, -44.4), (170.8, -45.9), (169.6, -46.6), (168.3, -46.6),
                      (166.5, -46.0), (166.6, -45.2), (168.0, -44.1), (170.7, -42.9), (171.5, -41.8),
                      (172.1, -40.9)],
        },
        "regions": [
            ("NTL", "Northland", 173.8, -35.4, "north"),
            ("AUK", "Auckland", 174.75, -36.85, "north"),
            ("WKO", "Waikato", 175.3, -37.8, "north"),
            ("BOP", "Bay of Plenty", 176.7, -38.1, "north"),
            ("GIS", "Gisborne", 177.9, -38.4, "north"),
            ("HKB", "Hawke's Bay", 176.6, -39.5, "north"),
            ("TKI", "Taranaki", 174.3, -39.3, "north"),
            ("MWT", "Manawatu-Whanganui", 175.6, -39.9, "north"),
            ("WGN", "Wellington", 175.4, -41.0, "north"),
            ("TAS", "Tasman", 172.7, -41.4, "south"),
            ("NSN", "Nelson", 173.28, -41.27, "south"),
            ("MBH", "Marlborough", 173.6, -41.7, "south"),
            ("WTC", "West Coast", 171.2, -42.5, "south"),
            ("CAN", "Canterbury", 172.0, -43.5, "south"),
            ("OTA", "Otago", 169.8, -45.3, "south"),
            ("STL", "Southland", 168.2, -45.9, "south"),
        ],
    },
    "de": {
        "outlines": {
            "main": [(6.0, 51.8), (6.8, 52.5), (7.0, 53.3), (8.5, 53.6), (8.9, 54.9), (9.9, 54.8),
                     (11.0, 54.0), (12.3, 54.3), (14.2, 53.9), (14.4, 53.2), (14.7, 52.1), (15.0, 51.1),
                     (14.3, 51.0), (12.1, 50.3), (13.8, 48.8), (13.0, 47.5), (10.5, 47.5), (9.6, 47.5),
                     (7.6, 47.6), (8.2, 49.0), (6.4, 49.5), (6.1, 50.2), (5.9, 51.0)],
        },
        "regions": [
            ("SH", "Schleswig-Holstein", 9.8, 54.2, "main"),
            ("HH", "Hamburg", 10.0, 53.55, "main"),
            ("NI", "Niedersachsen", 9.2, 52.7, "main"),
            ("HB", "Bremen", 8.8, 53.08, "main"),
            ("NW", "Nordrhein-Westfalen", 7.6, 51.5, "main"),
            ("HE", "Hessen", 9.0, 50.6, "main"),
            ("RP", "Rheinland-Pfalz", 7.4, 49.9, "main"),
            ("BW", "Baden-Wuerttemberg", 9.0, 48.5, "main"),
            ("BY", "Bayern", 11.5, 48.9, "main"),
            ("SL", "Saarland", 6.95, 49.4, "main"),
            ("BE", "Berlin", 13.4, 52.5, "main"),
            ("BB", "Brandenburg", 13.4, 51.9, "main"),
            ("MV", "Mecklenburg-Vorpommern", 12.5, 53.8, "main"),
            ("SN", "Sachsen", 13.3, 51.05, "main"),
            ("ST", "Sachsen-Anhalt", 11.7, 52.0, "main"),
            ("TH", "Thueringen", 11.0, 50.9, "main"),
        ],
    },
    "cn": {
        "outlines": {
            "mainland": [(73.5, 39.5), (75.0, 37.0), (78.0, 35.5), (79.0, 32.5), (81.0, 30.0), (85.0, 28.3),
                         (88.9, 27.9), (92.0, 26.9), (97.0, 28.0), (98.5, 25.0), (97.7, 24.0), (99.5, 22.0),
                         (101.8, 21.2), (105.5, 23.0), (106.7, 22.0), (108.0, 21.5), (110.4, 21.3),
                         (111.5, 21.6), (113.0, 22.0), (114.2, 22.2), (116.5, 22.9), (119.0, 25.3),
                         (119.8, 26.6), (121.0, 28.3), (122.0, 29.8), (121.9, 30.9), (121.0, 32.2),
                         (120.5, 33.5), (119.2, 34.7), (119.8, 35.6), (120.7, 36.3), (122.5, 36.9),
                         (121.0, 37.8), (118.9, 37.4), (118.0, 38.5), (117.7, 39.0), (119.0, 39.3),
                         (121.0, 40.8), (121.4, 39.0), (122.3, 40.5), (124.3, 39.9), (126.0, 41.5),
                         (128.1, 41.9), (130.6, 42.4), (131.2, 44.9), (133.0, 45.0), (134.7, 48.3),
                         (132.0, 47.7), (130.8, 48.9), (127.5, 49.8), (125.5, 52.9), (123.5, 53.5),
                         (120.5, 52.6), (119.8, 50.0), (117.8, 49.5), (116.0, 47.5), (115.5, 45.5),
                         (112.0, 45.1), (111.0, 43.6), (107.0, 42.0), (105.0, 41.6), (97.0, 42.8),
                         (96.0, 44.3), (91.0, 45.2), (90.7, 47.9), (87.8, 49.2), (85.5, 47.1), (82.5, 45.2),
                         (80.2, 44.9), (80.4, 42.9), (76.5, 40.5)],
            "hainan": [(108.6, 19.1), (109.6, 18.2), (110.5, 18.6), (111.0, 19.6), (110.6, 20.1), (109.5, 20.0)],
            "taiwan": [(120.1, 23.0), (120.7, 22.0), (121.5, 22.8), (121.9, 24.6), (121.5, 25.3), (121.0, 25.0)],
        },
        "regions": [
            ("BJ", "Beijing", 116.4, 40.2, "mainland"),
            ("TJ", "Tianjin", 117.3, 39.3, "mainland"),
            ("HE", "Hebei", 115.0, 38.4, "mainland"),
            ("SX", "Shanxi", 112.3, 37.6, "mainland"),
            ("NM", "Inner Mongolia", 111.7, 43.6, "mainland"),
            ("LN", "Liaoning", 122.6, 41.3, "mainland"),
            ("JL", "Jilin", 126.2, 43.7, "mainland"),
            ("HL", "Heilongjiang", 127.7, 47.9, "mainland"),
            ("SH", "Shanghai", 121.4, 31.2, "mainland"),
            ("JS", "Jiangsu", 119.5, 32.9, "mainland"),
            ("ZJ", "Zhejiang", 120.1, 29.2, "mainland"),
            ("AH", "Anhui", 117.2, 31.8, "mainland"),
            ("FJ", "Fujian", 118.0, 26.1, "mainland"),
            ("JX", "Jiangxi", 115.7, 27.6, "mainland"),
            ("SD", "Shandong", 118.2, 36.4, "mainland"),
            ("HA", "Henan", 113.6, 33.9, "mainland"),
            ("HB", "Hubei", 112.3, 30.9, "mainland"),
            ("HN", "Hunan", 111.7, 27.6, "mainland"),
            ("GD", "Guangdong", 113.4, 23.6, "mainland"),
            ("GX", "Guangxi", 108.8, 23.8, "mainland"),
            ("HI", "Hainan", 109.8, 19.2, "hainan"),
            ("CQ", "Chongqing", 107.8, 30.0, "mainland"),
            ("SC", "Sichuan", 102.7, 30.6, "mainland"),
            ("GZ", "Guizhou", 106.8, 26.8, "mainland"),
            ("YN", "Yunnan", 101.5, 25.0, "mainland"),
            ("XZ", "Tibet", 88.4, 31.5, "mainland"),
            ("SN", "Shaanxi", 108.9, 35.2, "mainland"),
            ("GS", "Gansu", 101.0, 38.0, "mainland"),
            ("QH", "Qinghai", 96.0, 35.7, "mainland"),
            ("NX", "Ningxia", 106.2, 37.3, "mainland"),
            ("XJ", "Xinjiang", 85.2, 41.1, "mainland"),
            ("HK", "Hong Kong", 114.17, 22.45, "mainland"),
            ("MO", "Macau", 113.55, 22.3, "mainland"),
            ("TW", "Taiwan", 120.96, 23.7, "taiwan"),
        ],
    },
    "us": {
        "outlines": {
            "conus": [(-124.7, 48.4), (-123.0, 48.9), (-95.2, 49.0), (-89.6, 48.0), (-84.5, 46.5),
                      (-82.5, 45.3), (-82.4, 43.0), (-79.0, 43.3), (-76.5, 44.2), (-74.8, 45.0),
                      (-71.5, 45.0), (-70.0, 46.7), (-67.8, 47.1), (-67.0, 44.8), (-70.2, 43.6),
                      (-70.7, 42.6), (-70.0, 41.7), (-71.9, 41.3), (-74.0, 40.6), (-74.0, 39.6),
                      (-75.0, 38.8), (-76.0, 36.9), (-75.5, 35.3), (-77.9, 33.9), (-79.2, 33.2),
                      (-81.0, 32.0), (-81.4, 30.7), (-80.0, 26.7), (-80.4, 25.2), (-81.8, 26.0),
                      (-82.8, 28.0), (-82.7, 29.8), (-84.0, 30.1), (-86.5, 30.4), (-89.5, 30.2),
                      (-89.4, 29.1), (-91.0, 29.3), (-93.8, 29.7), (-95.0, 29.2), (-97.2, 27.7),
                      (-97.2, 25.9), (-99.1, 26.4), (-100.3, 28.2), (-101.5, 29.8), (-103.0, 28.9),
                      (-104.5, 29.6), (-106.5, 31.8), (-108.2, 31.3), (-111.1, 31.3), (-114.8, 32.5),
                      (-117.1, 32.5), (-118.5, 34.0), (-120.6, 34.6), (-122.5, 37.2), (-123.8, 39.5),
                      (-124.4, 42.0), (-124.0, 46.3)],
            "alaska": [(-141.0, 69.6), (-141.0, 60.3), (-135.0, 58.5), (-130.0, 55.5), (-133.5, 57.0),
                       (-139.5, 59.7), (-146.0, 60.6), (-152.0, 59.0), (-157.0, 56.8), (-162.0, 55.0),
                       (-164.5, 54.6), (-158.0, 58.5), (-162.0, 59.8), (-165.0, 61.0), (-165.0, 62.5),
                       (-164.5, 63.2), (-161.0, 64.0), (-168.0, 65.6), (-164.0, 67.0), (-166.5, 68.3),
                       (-162.0, 70.3), (-156.5, 71.3), (-152.0, 70.8), (-146.0, 70.1)],
            "hawaii": [(-155.9, 20.2), (-155.0, 19.7), (-155.6, 18.9), (-156.0, 19.6)],
            "oahu": [(-158.3, 21.6), (-157.7, 21.3), (-157.9, 21.25), (-158.2, 21.3)],
        },
        "regions": [
            ("AL", "Alabama", -86.8, 32.8, "conus"), ("AK", "Alaska", -152.5, 64.0, "alaska"),
            ("AZ", "Arizona", -111.7, 34.3, "conus"), ("AR", "Arkansas", -92.4, 34.9, "conus"),
            ("CA", "California", -119.4, 37.2, "conus"), ("CO", "Colorado", -105.5, 39.0, "conus"),
            ("CT", "Connecticut", -72.7, 41.6, "conus"), ("DE", "Delaware", -75.5, 39.0, "conus"),
            ("DC", "District of Columbia", -77.03, 38.9, "conus"), ("FL", "Florida", -81.7, 28.6, "conus"),
            ("GA", "Georgia", -83.4, 32.7, "conus"), ("HI", "Hawaii", -155.6, 19.6, "hawaii+oahu"),
            ("ID", "Idaho", -114.6, 44.4, "conus"), ("IL", "Illinois", -89.2, 40.0, "conus"),
            ("IN", "Indiana", -86.3, 39.9, "conus"), ("IA", "Iowa", -93.5, 42.1, "conus"),
            ("KS", "Kansas", -98.4, 38.5, "conus"), ("KY", "Kentucky", -85.3, 37.5, "conus"),
            ("LA", "Louisiana", -92.0, 31.0, "conus"), ("ME", "Maine", -69.2, 45.4, "conus"),
            ("MD", "Maryland", -76.8, 39.3, "conus"), ("MA", "Massachusetts", -71.8, 42.3, "conus"),
            ("MI", "Michigan", -84.7, 43.7, "conus"), ("MN", "Minnesota", -94.3, 46.3, "conus"),
            ("MS", "Mississippi", -89.7, 32.7, "conus"), ("MO", "Missouri", -92.5, 38.4, "conus"),
            ("MT", "Montana", -109.6, 47.0, "conus"), ("NE", "Nebraska", -99.8, 41.5, "conus"),
            ("NV", "Nevada", -116.6, 39.3, "conus"), ("NH", "New Hampshire", -71.6, 43.7, "conus"),
            ("NJ", "New Jersey", -74.7, 40.2, "conus"), ("NM", "New Mexico", -106.1, 34.4, "conus"),
            ("NY", "New York", -75.5, 42.9, "conus"), ("NC", "North Carolina", -79.4, 35.6, "conus"),
            ("ND", "North Dakota", -100.5, 47.5, "conus"), ("OH", "Ohio", -82.8, 40.3, "conus"),
            ("OK", "Oklahoma", -97.5, 35.6, "conus"), ("OR", "Oregon", -120.6, 43.9, "conus"),
            ("PA", "Pennsylvania", -77.8, 40.9, "conus"), ("RI", "Rhode Island", -71.5, 41.7, "conus"),
            ("SC", "South Carolina", -80.9, 33.9, "conus"), ("SD", "South Dakota", -100.2, 44.4, "conus"),
            ("TN", "Tennessee", -86.3, 35.9, "conus"), ("TX", "Texas", -99.3, 31.5, "conus"),
            ("UT", "Utah", -111.7, 39.3, "conus"), ("VT", "Vermont", -72.7, 44.0, "conus"),
            ("VA", "Virginia", -78.8, 37.5, "conus"), ("WA", "Washington", -120.4, 47.4, "conus"),
            ("WV", "West Virginia", -80.6, 38.6, "conus"), ("WI", "Wisconsin", -89.8, 44.6, "conus"),
            ("WY", "Wyoming", -107.6, 43.0, "conus"),
        ],
    },
}

EXPECTED_COUNTS = {"au": 8, "nz": 16, "de": 16, "cn": 34, "us": 51}


def region_cells(country):
    outlines = {k: Polygon(v) for k, v in country["outlines"].items()}
    regions = country["regions"]
    cells = {}
    # Voronoi per outline piece among that piece's members, in a locally
    # isotropic frame (lon scaled by cos(mean lat)).
    pieces = {}
    for rid, _, lon, lat, piece in regions:
        for p in piece.split("+"):
            pieces.setdefault(p, []).append((rid, lon, lat))
    for piece, members in pieces.items():
        outline = outlines[piece]
        if len(members) == 1:
            cells.setdefault(members[0][0], []).append(outline)
            continue
        mean_lat = sum(m[2] for m in members) / len(members)
        sx = math.cos(math.radians(mean_lat))
        pts = MultiPoint([(lon * sx, lat) for _, lon, lat in members])
        minx, miny, maxx, maxy = outline.bounds
        envelope = Polygon([(minx * sx - 50, miny - 50), (maxx * sx + 50, miny - 50),
                            (maxx * sx + 50, maxy + 50), (minx * sx - 50, maxy + 50)])
        vor = voronoi_diagram(pts, envelope=envelope)
        for rid, lon, lat in members:
            p = Point(lon * sx, lat)
            cell = next(g for g in vor.geoms if g.contains(p))
            cell_ll = Polygon([(x / sx, y) for x, y in cell.exterior.coords])
            clipped = cell_ll.intersection(outline)
            geoms = [clipped] if clipped.geom_type == "Polygon" else list(clipped.geoms)
            geoms = [g for g in geoms if g.geom_type == "Polygon" and g.area > 1e-6]
            cells.setdefault(rid, []).extend(geoms)
    return cells


def round_ring(coords):
    ring = [[round(x, 4), round(y, 4)] for x, y in coords]
    out = []
    for c in ring:
        if not out or out[-1] != c:
            out.append(c)
    if out[0] != out[-1]:
        out.append(out[0])
    return out


def write_regions(path, country, cells):
    features = []
    for rid, name, lon, lat, _ in country["regions"]:
        polys = []
        for g in sorted(cells[rid], key=lambda g: -g.area):
            g = orient(g, sign=1.0)
            polys.append([round_ring(g.exterior.coords)])
        geometry = ({"type": "Polygon", "coordinates": polys[0]} if len(polys) == 1
                    else {"type": "MultiPolygon", "coordinates": polys})
        features.append({
            "type": "Feature",
            "properties": {"id": rid, "name": name, "abbr": rid[:4]},
            "geometry": geometry,
        })
    with open(path, "w", newline="\n") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")


def haversine_km(a, b):
    lon1, lat1, lon2, lat2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * 6371.0 * math.asin(math.sqrt(h))


def write_flows(path, country, seed):
    rng = np.random.default_rng(seed)
    regions = country["regions"]
    pop = rng.lognormal(mean=0.0, sigma=1.0, size=len(regions))
    with open(path, "w", newline="\n") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["origin", "dest", "magnitude"])
        for i, a in enumerate(regions):
            for j, b in enumerate(regions):
                if i == j:
                    continue
                d = max(haversine_km((a[2], a[3]), (b[2], b[3])), 50.0)
                m = 4.0e5 * pop[i] * pop[j] / d ** 1.2 * rng.lognormal(0.0, 0.4)
                w.writerow([a[0], b[0], max(1, int(round(m)))])


def write_grid(path, country):
    regions = country["regions"]
    n = len(regions)
    lons = np.array([r[2] for r in regions])
    lats = np.array([r[3] for r in regions])
    sx = math.cos(math.radians(lats.mean()))
    xs = (lons - lons.min()) * sx
    ys = lats.max() - lats
    span_x, span_y = max(xs.max(), 1e-9), max(ys.max(), 1e-9)
    aspect = span_x / span_y
    cells_needed = int(math.ceil(n * 1.25))
    h = max(1, int(round(math.sqrt(cells_needed / aspect))))
    w = max(1, int(math.ceil(cells_needed / h)))
    while w * h < n:
        w += 1
    gx = xs / span_x * (w - 1) if w > 1 else xs * 0
    gy = ys / span_y * (h - 1) if h > 1 else ys * 0
    cost = np.zeros((n, w * h))
    for i in range(n):
        for c in range(w * h):
            cx, cy = c % w, c // w
            cost[i, c] = (gx[i] - cx) ** 2 + (gy[i] - cy) ** 2
    rows, cols = linear_sum_assignment(cost)
    grid = {"gridSize": [w, h]}
    for i, c in zip(rows, cols):
        grid[regions[i][0]] = [int(c % w), int(c // w)]
    with open(path, "w", newline="\n") as f:
        json.dump(grid, f, indent=1, sort_keys=True)
        f.write("\n")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "fixtures")
    for seed, (code, country) in enumerate(sorted(COUNTRIES.items())):
        assert len(country["regions"]) == EXPECTED_COUNTS[code], code
        d = os.path.join(out, code)
        os.makedirs(d, exist_ok=True)
        cells = region_cells(country)
        write_regions(os.path.join(d, "regions.geojson"), country, cells)
        write_flows(os.path.join(d, "flows.csv"), country, 1000 + seed)
        write_grid(os.path.join(d, "grid.json"), country)
        print(code, len(country["regions"]), "regions")


if __name__ == "__main__":
    main()
