import dataclasses

import pytest

from ecalign.complexity import complexity_scores
from ecalign.econometrics import orthogonalize
from ecalign.entry import build_entry_panel
from ecalign.ingest import SampleFilterConfig, TradePanel, apply_sample_filters
from ecalign.relatedness import compute_relatedness
from ecalign.specialization import compute_rca
from ecalign.sustainability import ScoreVector, product_score, zscore_country_indicator
from ecalign.synth import generate_dataset


@pytest.fixture(scope="session")
def synth_data():
    return generate_dataset()


@pytest.fixture(scope="session")
def filtered_panel(synth_data):
    panel = TradePanel.from_frame(synth_data.trade)
    return apply_sample_filters(panel, synth_data.indicators, SampleFilterConfig())


@pytest.fixture(scope="session")
def specs(filtered_panel):
    return {year: compute_rca(filtered_panel, year) for year in filtered_panel.years}


@dataclasses.dataclass
class Derived:
    """Everything the pipeline derives from the synthetic panel, in memory."""

    bundles: dict
    eci: dict
    pci: dict
    pspi: dict
    pepi: dict
    pspi_orth: dict
    pepi_orth: dict
    income: dict
    entry_panel: object


@pytest.fixture(scope="session")
def derived(synth_data, filtered_panel, specs):
    bundles, eci, pci = {}, {}, {}
    pspi, pepi, pspi_orth, pepi_orth = {}, {}, {}, {}
    for year in filtered_panel.years:
        bundles[year] = compute_relatedness(specs[year])
        scores = complexity_scores(specs[year])
        eci[year] = ScoreVector("eci", year, "country", scores.eci, True)
        pci[year] = ScoreVector("pci", year, "product", scores.pci, True)
        spi = zscore_country_indicator(synth_data.indicators, "SPI", year,
                                       filtered_panel.countries)
        epi = zscore_country_indicator(synth_data.indicators, "EPI", year,
                                       filtered_panel.countries)
        pspi[year] = product_score(specs[year], filtered_panel, spi)
        pepi[year] = product_score(specs[year], filtered_panel, epi)
        pspi_orth[year] = orthogonalize(pspi[year], pci[year])
        pepi_orth[year] = orthogonalize(pepi[year], pci[year])
    income = dict(zip(synth_data.income_groups.country, synth_data.income_groups.group))
    panel = build_entry_panel(specs, bundles, pci, pspi_orth, pepi_orth, income,
                              pspi_raw=pspi, pepi_raw=pepi)
    return Derived(bundles=bundles, eci=eci, pci=pci, pspi=pspi, pepi=pepi,
                   pspi_orth=pspi_orth, pepi_orth=pepi_orth, income=income,
                   entry_panel=panel)
