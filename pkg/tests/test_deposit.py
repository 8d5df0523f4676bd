import hashlib
import re
import threading

import pytest
from hypothesis import given, settings

from softpub import simulator
from softpub.deposit import (AuthenticationError, ChecksumMismatch, CredentialError, DepositJob,
                             DepositReceipt, MappingError, ReceiptState, StepLog,
                             TargetValidationError, covered_fields, elicit_requirements,
                             map_to_dataverse, map_to_invenio, plan_jobs, run_deposit)
from softpub.model import (Agent, CanonicalRecord, Identifier, IdentifierScheme, Relation,
                           TargetConfig, TargetKind, config_from_dict)
from softpub.transport import HttpTransport

from strategies import records

JANE = Agent(given_names="Jane", family_names="Doe", orcid="0000-0002-1825-0097",
             email="jane.doe@example.org", affiliation="Example University")
RICK = Agent(given_names="Richard", family_names="Roe")
RECORD = CanonicalRecord(
    name="GoodSoft", version="1.2.0", description="Mesh toolkit.", authors=(JANE, RICK), license="MIT",
    keywords=("mesh", "hpc"), programming_languages=("C",), artifact_kind="software",
    repository_url="https://git.example.org/goodsoft", date_released="2021-07-01",
    identifiers=(Identifier(IdentifierScheme.DOI, "10.5281/zenodo.123", Relation.IS_VERSION_OF),))
ENV = {"SIM_TOKEN": "secret-token"}
PID_RE = re.compile(r"^10\.5072/sim\..+")


def target_for(handle, kind=TargetKind.INVENIO_RDM, name="t", **kw):
    return TargetConfig(name, kind, handle.url, credentials_env="SIM_TOKEN", **kw)


@pytest.fixture
def transport():
    return HttpTransport(timeout=5)


# ---- mapping -------------------------------------------------------------- #

def test_invenio_upload_type_and_creators():
    doc = map_to_invenio(RECORD).document
    assert doc["upload_type"] == "software"
    assert doc["creators"][0] == {"name": "Doe, Jane", "orcid": "0000-0002-1825-0097",
                                  "affiliation": "Example University"}
    assert doc["creators"][1] == {"name": "Roe, Richard"}
    assert doc["publication_date"] == "2021-07-01"
    assert {"identifier": "https://git.example.org/goodsoft", "relation": "isSupplementTo",
            "scheme": "url"} in doc["related_identifiers"]


def test_invenio_empty_keywords_omitted():
    doc = map_to_invenio(CanonicalRecord(name="x", artifact_kind="dataset", authors=(RICK,))).document
    assert "keywords" not in doc
    assert doc["upload_type"] == "dataset"


def test_invenio_unmappable_kind():
    with pytest.raises(MappingError):
        map_to_invenio(CanonicalRecord(name="x"))


def test_invenio_reports_unmapped():
    payload = map_to_invenio(RECORD)
    assert {u["field"] for u in payload.unmapped} == {"programming_languages"}


def _dv_fields(doc):
    return {f["typeName"]: f["value"] for f in doc["metadataBlocks"]["citation"]["fields"]}


def test_dataverse_authors_in_order():
    fields = _dv_fields(map_to_dataverse(RECORD).document)
    assert [a["authorName"]["value"] for a in fields["author"]] == ["Doe, Jane", "Roe, Richard"]
    assert fields["datasetContact"][0]["datasetContactEmail"]["value"] == "jane.doe@example.org"


def test_dataverse_languages_carried_as_keywords():
    payload = map_to_dataverse(RECORD)
    words = [k["keywordValue"]["value"] for k in _dv_fields(payload.document)["keyword"]]
    assert words == ["mesh", "hpc", "lang:C"]
    assert any(u["field"] == "programming_languages" for u in payload.unmapped)


def test_dataverse_license_term():
    assert map_to_dataverse(RECORD).document["license"] == {"name": "MIT"}


def test_dataverse_contact_required():
    record = CanonicalRecord(name="x", authors=(RICK,))
    with pytest.raises(MappingError, match="email"):
        map_to_dataverse(record)
    assert "datasetContact" not in _dv_fields(map_to_dataverse(record, require_contact=False).document)


@settings(max_examples=100, deadline=None)
@given(records())
def test_mapping_totality(record):
    present = set(record.values())
    for payload in (map_to_invenio(record), map_to_dataverse(record, require_contact=False)):
        assert present <= covered_fields(payload)
        assert not set(payload.mapped) & {u["field"] for u in payload.unmapped}


# ---- run_deposit ---------------------------------------------------------- #

@pytest.mark.parametrize("mode,kind", [("invenio", TargetKind.INVENIO_RDM), ("dataverse", TargetKind.DATAVERSE)])
def test_metadata_only_deposit(mode, kind, transport):
    with simulator.serve(mode=mode) as handle:
        receipt = run_deposit(DepositJob("u", target_for(handle, kind), RECORD), transport, env=ENV)
        assert receipt.state == "published"
        assert PID_RE.match(receipt.pid.value) and receipt.version_index == 1
        (rec,) = handle.snapshot()["records"]
        (ver,) = rec["versions"]
        assert ver["files"] == [] and ver["pid"] == receipt.pid.value


def test_deposit_with_files(tmp_path, invenio_sim, transport):
    a, b = tmp_path / "a.tar.gz", tmp_path / "b.whl"
    a.write_bytes(b"alpha" * 100)
    b.write_bytes(b"beta")
    receipt = run_deposit(DepositJob("u", target_for(invenio_sim), RECORD, (a, b)), transport, env=ENV)
    files = invenio_sim.snapshot()["records"][0]["versions"][0]["files"]
    assert [(f["key"], f["checksum"]) for f in files] == [
        ("a.tar.gz", "sha256:" + hashlib.sha256(a.read_bytes()).hexdigest()),
        ("b.whl", "sha256:" + hashlib.sha256(b"beta").hexdigest())]
    assert receipt.landing_url.endswith(f"/records/{receipt.record_id}")


@pytest.mark.parametrize("mode,kind", [("invenio", TargetKind.INVENIO_RDM), ("dataverse", TargetKind.DATAVERSE)])
def test_prior_record_gives_next_version(mode, kind, transport):
    with simulator.serve(mode=mode) as handle:
        target = target_for(handle, kind)
        first = run_deposit(DepositJob("u", target, RECORD), transport, env=ENV)
        second = run_deposit(DepositJob("u", target, RECORD, prior_record_id=first.record_id), transport, env=ENV)
        assert second.version_index == first.version_index + 1
        assert second.concept_id == first.concept_id
        (rec,) = handle.snapshot()["records"]
        assert [v["state"] for v in rec["versions"]] == ["published", "published"]


def test_invalid_token_fails_before_any_draft(transport):
    with simulator.serve(mode="invenio", tokens={"other"}) as handle:
        with pytest.raises(AuthenticationError):
            run_deposit(DepositJob("u", target_for(handle), RECORD), transport, env=ENV)
        assert handle.snapshot()["records"] == []


def test_missing_credentials(invenio_sim, transport):
    with pytest.raises(CredentialError, match="SIM_TOKEN"):
        run_deposit(DepositJob("u", target_for(invenio_sim), RECORD), transport, env={})


def test_checksum_mismatch_then_resume(tmp_path, transport):
    art = tmp_path / "a.bin"
    art.write_bytes(b"payload")
    log_path = tmp_path / "steps.json"
    with simulator.serve(mode="invenio", faults=("corrupt=upload",)) as handle:
        job = DepositJob("u", target_for(handle), RECORD, (art,))
        with pytest.raises(ChecksumMismatch) as err:
            run_deposit(job, transport, env=ENV, step_log=log_path)
        assert err.value.step == "upload"
        assert all(v["state"] == "draft" for r in handle.snapshot()["records"] for v in r["versions"])
        receipt = run_deposit(job, transport, env=ENV, step_log=log_path)
        (rec,) = handle.snapshot()["records"]
        assert [v["state"] for v in rec["versions"]] == ["published"]
        assert receipt.record_id == rec["record_id"]


def test_validation_rejection_surfaces_body_and_step(invenio_sim, transport):
    record = CanonicalRecord(name="x", artifact_kind="software")  # no creators
    with pytest.raises(TargetValidationError) as err:
        run_deposit(DepositJob("u", target_for(invenio_sim), record), transport, env=ENV)
    assert err.value.step == "publish"
    assert "metadata.creators" in str(err.value)


def test_step_log_discarded_for_other_prior(tmp_path):
    target = TargetConfig("t", TargetKind.INVENIO_RDM, "http://x")
    path = tmp_path / "s.json"
    log = StepLog.load(path, DepositJob("u", target, RECORD))
    log.set(record_id="7", published=True)
    assert StepLog.load(path, DepositJob("u", target, RECORD)).get("record_id") == "7"
    assert StepLog.load(path, DepositJob("u", target, RECORD, prior_record_id="7")).get("record_id") is None


def test_job_rejects_duplicate_file_names(tmp_path):
    target = TargetConfig("t", TargetKind.INVENIO_RDM, "http://x")
    with pytest.raises(ValueError):
        DepositJob("u", target, RECORD, (tmp_path / "a" / "x.zip", tmp_path / "b" / "x.zip"))


def test_receipt_invariant():
    with pytest.raises(ValueError):
        DepositReceipt("u", "t", TargetKind.INVENIO_RDM, "1", "1", None, 1, "published", "http://x")
    r = DepositReceipt("u", "t", TargetKind.INVENIO_RDM, "1", "1", Identifier("doi", "10.5072/sim.1.1"), 1,
                       "published", "http://x")
    assert DepositReceipt.from_dict(r.to_dict()) == r


# ---- elicitation ---------------------------------------------------------- #

def test_elicit_from_simulator_document(transport):
    doc = {"name": "curated", "mandatory_fields": ["name", "version", "license"]}
    with simulator.serve(mode="invenio", requirements=doc) as handle:
        profile = elicit_requirements(target_for(handle), transport)
    assert profile.mandatory_fields == ("name", "version", "license")


def test_elicit_unreachable_falls_back(transport):
    target = TargetConfig("t", TargetKind.INVENIO_RDM, "http://127.0.0.1:9", credentials_env="X")
    notes = []
    assert elicit_requirements(target, transport, notes).name == "invenio-default"
    assert len(notes) == 1 and "invenio-default" in notes[0]


def test_elicit_dataverse_fallback(dataverse_sim, transport):
    notes = []
    assert elicit_requirements(target_for(dataverse_sim, TargetKind.DATAVERSE), transport, notes).name == "dataverse-default"
    assert notes


def test_elicit_configured_profile_wins(invenio_sim, transport):
    target = target_for(invenio_sim, requirement_profile={"name": "mine", "mandatory_fields": ["name"]})
    assert elicit_requirements(target, transport).name == "mine"


# ---- fan-out and versioning ---------------------------------------------- #

def test_n_by_m_fan_out(tmp_path, transport):
    with simulator.serve(mode="invenio") as a, simulator.serve(mode="dataverse") as b:
        config = config_from_dict({
            "unit": [{"name": "core"}, {"name": "plugins"}],
            "target": [{"name": "zen", "kind": "invenio_rdm", "base_url": a.url, "credentials_env": "SIM_TOKEN"},
                       {"name": "dv", "kind": "dataverse", "base_url": b.url, "credentials_env": "SIM_TOKEN"}]})
        records = {"core": RECORD, "plugins": CanonicalRecord(**{**RECORD.values(), "name": "GoodSoft Plugins"})}
        jobs = plan_jobs(config, records)
        assert len(jobs) == 4
        receipts = [run_deposit(j, transport, env=ENV) for j in jobs]
        assert len({(r.unit, r.target) for r in receipts}) == 4
        assert len(a.snapshot()["records"]) == 2 and len(b.snapshot()["records"]) == 2


def test_rerun_gives_one_record_plus_one_version(tmp_path, invenio_sim, transport):
    config = config_from_dict({"unit": [{"name": "u"}], "target": [
        {"name": "t", "kind": "invenio_rdm", "base_url": invenio_sim.url, "credentials_env": "SIM_TOKEN"}]})
    state = ReceiptState(tmp_path / "state.json")
    for _ in range(2):
        (job,) = plan_jobs(config, {"u": RECORD}, state)
        state.update(run_deposit(job, transport, env=ENV))
    (rec,) = invenio_sim.snapshot()["records"]
    assert [v["version_index"] for v in rec["versions"]] == [1, 2]
    assert state.get("u", "t").version_index == 2


def test_receipt_state_concurrent_updates(tmp_path):
    state = ReceiptState(tmp_path / "state.json")

    def write(i):
        state.update(DepositReceipt(f"u{i}", "t", TargetKind.INVENIO_RDM, str(i), str(i),
                                    Identifier("doi", f"10.5072/sim.{i}.1"), 1, "published", "http://x"))

    threads = [threading.Thread(target=write, args=(i,)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(state.prior_record_id(f"u{i}", "t") == str(i) for i in range(16))
