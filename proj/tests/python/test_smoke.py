"""Smoke tests of the python bindings against the bundled case study."""

import os
import sys

import pyreflow


def models_dir():
    return os.environ["REFLOW_MODELS_DIR"]


def main():
    p = pyreflow.load_project(os.path.join(models_dir(), "casestudy.rwf"))

    listing = p.canonicalize("c1")
    assert "[x1 & y] Shipping -> Billing" in listing, listing
    assert not p.cpog_equivalent("c1", "c2")
    assert p.cpog_equivalent("c1", "c1")

    assert len(p.histories("c1")) == 14
    assert len(p.histories("c2")) == 23
    assert len(p.safe_histories("S")) == 10

    ok = p.guideline_check("S", {"Reject", "Confirmation"})
    assert ok["holds"], ok
    bad = p.guideline_check("S", set())
    assert not bad["holds"] and "Reject" in bad["counterexample"], bad

    assert len(p.tracesof("Configuration1")) == 3
    assert len(p.tracesof("Configuration2")) == 7

    run = p.simulate(
        "Configuration1",
        choices="InventoryCheck=true,CreditCheck=true,SupplierCheck=true",
    )
    assert run["ok"]
    assert (
        run["output"]
        == "[<OrderReceipt>, <InventoryCheck>, <CreditCheck>, <Shipping>, <Billing>, "
        "<Archiving>, <Confirmation>, <TERMINATE>]\n"
    ), run["output"]

    v = p.bisim("weak", "CONFIG1 | [CONFIG2 / CONFIG1]", "CONFIG2")
    assert not v["bisimilar"]
    sequences = [tuple(w["sequence"]) for w in v["witnesses"] if w["side"] == "left"]
    assert ("Receipt_o1", "'RejectIC_o1") in sequences, sequences

    assert p.bisim("weak", "0 | CONFIG2", "CONFIG2")["bisimilar"]
    assert p.bisim("strong-of", "a.0 + a.0", "a.0")["bisimilar"]
    assert p.sfdrdepth("[b.0 / a.0]") == 1

    check = p.ltl_check(
        "CF2",
        "Configuration2",
        choices="InventoryCheck=false,SupplierCheck=true,CreditCheck=true",
    )
    assert check["holds"], check
    neg = p.ltl_check(
        "CF2",
        "Configuration1",
        choices="InventoryCheck=true,CreditCheck=true,SupplierCheck=true",
    )
    assert not neg["holds"]

    try:
        pyreflow.load_project("/nonexistent.rwf")
        raise AssertionError("expected a load failure")
    except pyreflow.ReflowError:
        pass

    print("python smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
