import pytest

import ssoprobe


def test_presets_and_policy():
    names = ssoprobe.presets()
    assert len(names) == 17 and names[-1] == "hardened"
    assert ssoprobe.policy("drupal")["key_lookup"] == "by_handle"


def test_key_value_round_trip():
    params = [("openid.mode", "id_res"), ("openid.mode", "dup"), ("openid.ns", "http://specs.openid.net/auth/2.0")]
    body = ssoprobe.encode_key_value(params)
    assert body == "mode:id_res\nmode:dup\nns:http://specs.openid.net/auth/2.0\n"
    assert ssoprobe.decode_key_value(body) == params
    with pytest.raises(ssoprobe.CodecError):
        ssoprobe.decode_key_value("no colon here\n")


def test_nonce():
    nonce = ssoprobe.make_nonce(1116177111, "abc")
    assert nonce == "2005-05-15T17:11:51Zabc"
    assert ssoprobe.nonce_timestamp(nonce) == 1116177111
    assert ssoprobe.nonce_timestamp("junk") is None


def test_audit_cf_openid():
    report = ssoprobe.audit("cf-openid")
    vulnerable = {r["attack_class"] for r in report["body"]["results"] if r["verdict"] == "VULNERABLE"}
    assert vulnerable == {"TRC", "IDS", "UNSIGNED"}


def test_run_profile_by_name_and_dict():
    assert ssoprobe.run_profile("drupal", "kc-2")["verdict"] == "VULNERABLE"
    ids = next(p for p in ssoprobe.profiles() if p["name"] == "ids")
    assert ssoprobe.run_profile("hardened", ids)["verdict"] == "SAFE"


def test_matrix_matches_expected():
    m = ssoprobe.matrix()
    assert m["diff"] == []
    assert m["compromised"] == 11
    expected = ssoprobe.expected_matrix()
    assert sorted(expected["cf-openid"]) == ["IDS", "TRC", "UNSIGNED"]


def test_unreachable_target_raises():
    with pytest.raises(ssoprobe.TargetNotConformant):
        ssoprobe.run_profile("http://127.0.0.1:1/", "ids")
