#include "p2emec/metrics.hpp"

#include <fstream>
#include <stdexcept>

#include "p2emec/reward.hpp"
#include "p2emec/text.hpp"

namespace p2emec {

const char* const kMetricsCsvHeader =
    "episode,steps,depleted,avg_dl_delay_s,avg_ul_delay_s,min_cum_earning,mean_cum_earning,"
    "max_cum_battery_pct,mean_cum_battery_pct,dl_reward_sum,ul_reward_sum";

MetricsRecord make_metrics_record(long long episode, const EpisodeLedger& ledger,
                                  double dl_reward_sum, double ul_reward_sum) {
    MetricsRecord r;
    r.episode = episode;
    r.steps = ledger.steps();
    r.depleted = ledger.depleted();
    const double denom = static_cast<double>(ledger.n_ues()) * ledger.steps();
    r.avg_dl_delay = ledger.total_dl_latency() / denom;
    r.avg_ul_delay = ledger.total_ul_latency() / denom;
    r.min_cum_earning = ledger.min_cum_earning();
    r.mean_cum_earning = ledger.mean_cum_earning();
    r.max_cum_battery_pct = ledger.max_cum_q();
    r.mean_cum_battery_pct = ledger.mean_cum_q();
    r.dl_reward_sum = dl_reward_sum;
    r.ul_reward_sum = ul_reward_sum;
    return r;
}

std::string metrics_csv_row(const MetricsRecord& r) {
    std::string row = std::to_string(r.episode);
    row += ',';
    row += std::to_string(r.steps);
    row += ',';
    row += r.depleted ? '1' : '0';
    for (double v : {r.avg_dl_delay, r.avg_ul_delay, r.min_cum_earning, r.mean_cum_earning,
                     r.max_cum_battery_pct, r.mean_cum_battery_pct, r.dl_reward_sum,
                     r.ul_reward_sum}) {
        row += ',';
        row += format_double(v);
    }
    return row;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw std::runtime_error("cannot open metrics CSV for writing: " + path.string());
    out << kMetricsCsvHeader << '\n';
    for (const auto& r : records) out << metrics_csv_row(r) << '\n';
    if (!out) throw std::runtime_error("metrics CSV write failed: " + path.string());
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty metrics CSV: " + path.string());
    if (trim(line) != kMetricsCsvHeader)
        throw std::runtime_error("unexpected metrics CSV header in " + path.string());
    std::vector<MetricsRecord> records;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(trim(line), ',');
        if (cols.size() != 11)
            throw std::runtime_error("bad metrics CSV row in " + path.string());
        MetricsRecord r;
        r.episode = parse_int(cols[0]);
        r.steps = static_cast<int>(parse_int(cols[1]));
        r.depleted = parse_bool(cols[2]);
        r.avg_dl_delay = parse_double(cols[3]);
        r.avg_ul_delay = parse_double(cols[4]);
        r.min_cum_earning = parse_double(cols[5]);
        r.mean_cum_earning = parse_double(cols[6]);
        r.max_cum_battery_pct = parse_double(cols[7]);
        r.mean_cum_battery_pct = parse_double(cols[8]);
        r.dl_reward_sum = parse_double(cols[9]);
        r.ul_reward_sum = parse_double(cols[10]);
        records.push_back(r);
    }
    return records;
}

}  // namespace p2emec
