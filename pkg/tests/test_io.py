"""Waveform/annotation parsing, joining, and prediction CSV round trips."""
import io

import numpy as np
import pytest

from ventclass.core import (BreathAnnotation, RawBreathRecord, SamplingSpec,
                            VentMode, WaveformFile)
from ventclass.errors import (DuplicateAnnotationError, JoinError, ParseError,
                              SchemaError, StructureError)
from ventclass.io import (join_dataset, parse_annotations,
                          parse_waveform_file, read_predictions,
                          serialize_waveform_file, write_annotations,
                          write_predictions)
from ventclass.synth import SynthConfig, generate_patient


def _breath_block(ordinal, n, flow=20.0, pressure=8.0):
    lines = [f"BS, S:{ordinal}"]
    lines += [f"{flow}, {pressure}"] * n
    lines.append("BE")
    return lines


class TestParseWaveform:
    def test_two_breaths_of_100_samples(self):
        text = _breath_block(0, 100) + _breath_block(1, 100)
        wf = parse_waveform_file(text, "p1", "f1")
        assert len(wf.breaths) == 2
        assert all(b.flow.size == 100 for b in wf.breaths)
        assert wf.dropped_breaths == 0

    def test_empty_stream(self):
        with pytest.raises(StructureError, match="no breaths"):
            parse_waveform_file([], "p1", "f1")

    def test_non_numeric_sample_cites_line(self):
        text = _breath_block(0, 4)
        text.insert(5, "abc, 9.0")  # becomes line 6; shift to line 7
        text = [""] + text
        with pytest.raises(ParseError, match="7"):
            parse_waveform_file(text, "p1", "f1")

    def test_be_without_bs(self):
        with pytest.raises(StructureError):
            parse_waveform_file(["BE"], "p1", "f1")

    def test_samples_outside_block(self):
        with pytest.raises(StructureError):
            parse_waveform_file(["1.0, 2.0"], "p1", "f1")

    def test_non_increasing_ordinals(self):
        text = _breath_block(3, 2) + _breath_block(3, 2)
        with pytest.raises(StructureError):
            parse_waveform_file(text, "p1", "f1")

    def test_truncated_final_breath_dropped(self):
        text = _breath_block(0, 5) + ["BS, S:1", "1.0, 2.0"]
        wf = parse_waveform_file(text, "p1", "f1")
        assert len(wf.breaths) == 1
        assert wf.dropped_breaths == 1

    def test_round_trip_via_serializer(self):
        cfg = SynthConfig(mode=VentMode.PC, n_breaths=10, seed=6)
        wf, _ = generate_patient(cfg)
        sink = io.StringIO()
        serialize_waveform_file(wf, sink)
        back = parse_waveform_file(sink.getvalue().splitlines(),
                                   wf.patient_id, wf.file_id)
        assert len(back.breaths) == len(wf.breaths)
        for a, b in zip(wf.breaths, back.breaths):
            assert a.breath_ordinal == b.breath_ordinal
            np.testing.assert_allclose(b.flow, a.flow, atol=5e-7)
            np.testing.assert_allclose(b.pressure, a.pressure, atol=5e-7)


class TestParseAnnotations:
    def test_basic_row(self):
        anns = parse_annotations(["file_id,breath_ordinal,mode,flags",
                                  "f1,0,vc,"])
        assert anns == [BreathAnnotation("f1", 0, VentMode.VC, frozenset())]

    def test_unknown_mode_maps_to_other(self):
        anns = parse_annotations(["file_id,breath_ordinal,mode,flags",
                                  "f1,3,prvc,"])
        assert anns[0].mode is VentMode.OTHER

    def test_duplicate_key(self):
        rows = ["file_id,breath_ordinal,mode,flags", "f1,5,vc,", "f1,5,pc,"]
        with pytest.raises(DuplicateAnnotationError):
            parse_annotations(rows)

    def test_missing_column(self):
        with pytest.raises(SchemaError):
            parse_annotations(["file_id,mode,flags", "f1,vc,"])

    def test_flags_parsed(self):
        anns = parse_annotations(["file_id,breath_ordinal,mode,flags",
                                  "f1,0,ps,cough|pva"])
        assert anns[0].flags == frozenset({"cough", "pva"})

    def test_unknown_flag_rejected(self):
        with pytest.raises(ParseError):
            parse_annotations(["file_id,breath_ordinal,mode,flags",
                               "f1,0,ps,sneeze"])

    def test_round_trip(self):
        anns = [BreathAnnotation("f1", 0, VentMode.PS, frozenset({"cough"})),
                BreathAnnotation("f1", 1, VentMode.PAV, frozenset())]
        sink = io.StringIO()
        write_annotations(anns, sink)
        assert parse_annotations(sink.getvalue().splitlines()) == anns


def _waveform(file_id, n_breaths, patient_id="p1"):
    flow = np.concatenate((np.full(20, 20.0), np.full(10, -10.0)))
    pressure = np.full(30, 8.0)
    breaths = [RawBreathRecord(i, flow.copy(), pressure.copy())
               for i in range(n_breaths)]
    return WaveformFile(patient_id=patient_id, file_id=file_id,
                        spec=SamplingSpec(), breaths=breaths)


class TestJoinDataset:
    def test_full_match(self):
        wf = _waveform("f1", 10)
        anns = [BreathAnnotation("f1", i, VentMode.VC) for i in range(10)]
        ds = join_dataset([wf], anns)
        assert len(ds.entries) == 10
        assert all(e.mode is VentMode.VC for e in ds.entries)

    def test_unannotated_breath_counted(self):
        wf = _waveform("f1", 10)
        anns = [BreathAnnotation("f1", i, VentMode.VC) for i in range(9)]
        ds = join_dataset([wf], anns)
        assert len(ds.entries) == 9
        assert ds.unannotated == 1

    def test_other_filtered(self):
        wf = _waveform("f1", 10)
        anns = [BreathAnnotation("f1", i, VentMode.VC) for i in range(5)] + \
               [BreathAnnotation("f1", i, VentMode.OTHER) for i in range(5, 10)]
        ds = join_dataset([wf], anns)
        assert len(ds.entries) == 5
        assert ds.filtered_other == 5
        kept_all = join_dataset([wf], anns, filter_other=False)
        assert len(kept_all.entries) == 10

    def test_orphan_annotation_file(self):
        anns = [BreathAnnotation("nope", 0, VentMode.VC)]
        with pytest.raises(JoinError):
            join_dataset([_waveform("f1", 1)], anns)

    def test_annotation_for_missing_breath(self):
        anns = [BreathAnnotation("f1", 0, VentMode.VC),
                BreathAnnotation("f1", 99, VentMode.VC)]
        with pytest.raises(JoinError):
            join_dataset([_waveform("f1", 1)], anns)

    def test_summary_counts(self):
        files = [_waveform("f1", 4, "p1"), _waveform("f2", 6, "p2")]
        anns = [BreathAnnotation("f1", i, VentMode.VC) for i in range(4)] + \
               [BreathAnnotation("f2", i, VentMode.PS,
                                 frozenset({"suction"})) for i in range(6)]
        ds = join_dataset(files, anns)
        s = ds.summary()
        assert s["modes"]["vc"]["breaths"] == 4
        assert s["modes"]["ps"]["breaths"] == 6
        assert s["modes"]["ps"]["suction"] == 6
        assert s["total_breaths"] == 10
        assert s["patients"] == 2


class TestPredictions:
    ROW = ("f1", 0, VentMode.VC, VentMode.VC,
           np.array([1.0, 0, 0, 0, 0]))

    def test_single_row_format(self):
        sink = io.StringIO()
        write_predictions([self.ROW], sink)
        lines = sink.getvalue().splitlines()
        assert lines[0] == ("file_id,breath_ordinal,raw_mode,smoothed_mode,"
                            "p_vc,p_pc,p_ps,p_cpap,p_pav")
        assert lines[1] == "f1,0,vc,vc,1.000000,0.000000,0.000000,0.000000," \
                           "0.000000"

    def test_zero_rows_header_only(self):
        sink = io.StringIO()
        write_predictions([], sink)
        assert sink.getvalue().splitlines() == [
            "file_id,breath_ordinal,raw_mode,smoothed_mode,"
            "p_vc,p_pc,p_ps,p_cpap,p_pav"]

    def test_round_trip(self):
        rows = [("f1", 0, VentMode.VC, VentMode.VC,
                 np.array([0.9, 0.1, 0, 0, 0])),
                ("f1", 1, VentMode.PS, VentMode.PC,
                 np.array([0, 0.5, 0.5, 0, 0])),
                ("f2", 0, VentMode.PAV, VentMode.PAV,
                 np.array([0, 0, 0, 0.25, 0.75]))]
        sink = io.StringIO()
        write_predictions(rows, sink)
        back = read_predictions(sink.getvalue().splitlines())
        for orig, rt in zip(rows, back):
            assert rt[:4] == orig[:4]
            np.testing.assert_allclose(rt[4], orig[4], atol=5e-7)

    def test_bad_fraction_sum_rejected(self):
        bad = ("f1", 0, VentMode.VC, VentMode.VC, np.array([0.5, 0, 0, 0, 0]))
        with pytest.raises(ValueError):
            write_predictions([bad], io.StringIO())
