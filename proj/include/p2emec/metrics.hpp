#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace p2emec {

class EpisodeLedger;

// One completed episode's logged quantities. Worst-case aggregations (min
// earning, max battery percentage) follow the optimization objective; per-UE
// means are logged alongside because the reported figures plot those.
struct MetricsRecord {
    long long episode = 0;
    int steps = 0;  // iterations survived
    bool depleted = false;
    double avg_dl_delay = 0.0;          // s, mean over UEs and steps
    double avg_ul_delay = 0.0;          // s
    double min_cum_earning = 0.0;       // worst-case earning potential
    double mean_cum_earning = 0.0;
    double max_cum_battery_pct = 0.0;   // worst-case battery consumption
    double mean_cum_battery_pct = 0.0;
    double dl_reward_sum = 0.0;         // episodic sum of per-step DL rewards
    double ul_reward_sum = 0.0;
};

MetricsRecord make_metrics_record(long long episode, const EpisodeLedger& ledger,
                                  double dl_reward_sum, double ul_reward_sum);

// Fixed, documented column order.
extern const char* const kMetricsCsvHeader;

std::string metrics_csv_row(const MetricsRecord& r);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace p2emec
