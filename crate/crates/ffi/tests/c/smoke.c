#include <stdio.h>
#include <string.h>
#include "boneage.h"

int main(void) {
    BaDataset *ds = NULL;
    if (ba_dataset_synth(30, 7, &ds) != BA_STATUS_OK) {
        fprintf(stderr, "synth: %s\n", ba_last_error_message());
        return 1;
    }
    double f[25];
    if (ba_feature_count() != 25 || ba_dataset_features(ds, 0, f) != BA_STATUS_OK) {
        return 2;
    }
    double a[4] = {0, 1, 2, 3}, b[4] = {0, 1, 2, 4}, d = -1;
    if (ba_elastic_distance(BA_MEASURE_DTW, 0.0, 0.0, a, b, 4, &d) != BA_STATUS_OK || d != 1.0) {
        return 3;
    }
    BaAgeBank *bank = NULL;
    if (ba_age_bank_train(ds, BA_FACTORS_NONE, &bank) != BA_STATUS_OK) {
        fprintf(stderr, "train: %s\n", ba_last_error_message());
        return 4;
    }
    double ages[30];
    size_t count = 0;
    if (ba_age_bank_predict(bank, ds, 0.95, ages, 30, &count) != BA_STATUS_OK || count != 30) {
        return 5;
    }
    if (ba_dataset_load("/nonexistent/x.jsonl", &ds) != BA_STATUS_IO || ba_last_error_message() == NULL) {
        return 6;
    }
    printf("ok %s %zu\n", ba_version(), count);
    ba_age_bank_free(bank);
    ba_dataset_free(ds);
    return 0;
}
