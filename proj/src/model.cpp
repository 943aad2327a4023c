#include "rankae/model.hpp"

#include <cstdio>
#include <ostream>

namespace rankae {

void write_train_report_csv(std::ostream& out, const TrainReport& report) {
  out << "epoch,l_h,l_ae,total,val_p1,seconds\n";
  char buf[160];
  for (const EpochStats& e : report.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.6f\n", e.epoch,
                  e.mean_lh, e.mean_lae, e.total, e.val_p1, e.seconds);
    out << buf;
  }
}

}  // namespace rankae
