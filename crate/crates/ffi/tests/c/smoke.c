#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "gnnseg.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        int rc_ = (call);                                                   \
        if (rc_ != GNNSEG_OK) {                                             \
            fprintf(stderr, "%s -> %d: %s\n", #call, rc_, gnnseg_last_error()); \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    const char *config =
        "{\"gray_widths\":[4],\"position_widths\":[4],\"gnn_widths\":[4,2],"
        "\"heads\":2,\"mutual_widths\":[8,2],\"final_widths\":[4,1],"
        "\"superpixel\":{\"target_regions\":20}}";
    GnnsegModel *model = NULL;
    GnnsegSlice *slice = NULL;
    GnnsegMask *truth = NULL;
    GnnsegMask *pred = NULL;
    GnnsegClassMetrics scores[3];
    double loss = NAN;

    CHECK(gnnseg_model_new(config, 1, &model));
    CHECK(gnnseg_phantom(24, 3, 0.05, &slice, &truth));
    const GnnsegSlice *slices[1] = {slice};
    const GnnsegMask *masks[1] = {truth};
    CHECK(gnnseg_model_train(model, slices, masks, 1, 2, 0, &loss));
    CHECK(gnnseg_infer(model, slice, &pred));
    CHECK(gnnseg_evaluate(pred, truth, scores, 3));

    size_t n = gnnseg_mask_width(pred) * gnnseg_mask_height(pred);
    unsigned char *labels = malloc(n);
    CHECK(gnnseg_mask_copy_labels(pred, labels, n));
    free(labels);

    if (gnnseg_model_load("/nonexistent.ckpt", &model) != GNNSEG_ERR_IO || model != NULL) {
        fprintf(stderr, "expected an I/O failure\n");
        return 1;
    }
    printf("loss=%.6f dice_wm=%.6f classes=%d,%d,%d\n", loss, scores[2].dice, scores[0].class_id,
           scores[1].class_id, scores[2].class_id);

    gnnseg_mask_free(pred);
    gnnseg_mask_free(truth);
    gnnseg_slice_free(slice);
    return 0;
}
