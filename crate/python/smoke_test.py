"""Smoke test for the Python extension.

Build and install first:
    pip install --no-build-isolation -e crates/py
"""

import reserve_insure_py as ri


def main():
    prices = ri.MarketPrices([10.0, 40.0], penalty=100.0)
    model = ri.RenewableModel([10.0, 10.0], [2.0, 2.0], 40.0)
    storage = ri.StorageParams(12.0, 7.0)

    fi = ri.feasibility_interval(prices, model, storage)
    assert fi["floor"] <= fi["cap"], fi
    assert abs(fi["floor"] - 39.37192407293363) < 1e-9, fi

    ct = ri.standard_contract(prices, model, storage)
    base = ri.expected_profits(prices, model, storage)
    with_ct = ri.expected_profits(prices, model, storage, ct)
    assert with_ct["storage"] > base["storage"]

    bids = ri.optimal_bid(prices, model, ct.g)
    assert bids[1] > base["commitments"][1]

    cls = ri.profitability_classify(prices, model, storage, 40.0)
    assert cls["class"] in ("da-profitable", "insurance-only", "unprofitable")

    tw = ri.two_way_commitment(prices, model, 1, 0.0, 0.0)
    assert abs(tw["commitment"] - base["commitments"][1]) < 1e-9

    s = ri.settle_scenario(prices, model, storage, seed=1, stream=0, contract=ct)
    assert s["storage"]["net"] >= ri.settle_scenario(prices, model, storage, seed=1, stream=0)["storage"]["net"] - 1e-9

    d = ri.network_dispatch()
    assert len(d["lmp"]) == 24

    try:
        ri.StorageParams(-1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative capacity accepted")

    print("smoke test ok: floor %.4f, cap %.1f, storage gain %.2f"
          % (fi["floor"], fi["cap"], with_ct["storage"] - base["storage"]))


if __name__ == "__main__":
    main()
